#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maxcal/decomposition.hpp"
#include "support/random_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

using namespace maxcal;

namespace {

MarketQuotes model_a(double barrier_price = -1.0) {
    MarketQuotes q;
    q.spot = 1.0;
    q.upper_bound = 1.5;
    MaturityQuotes m;
    m.t = 1.0;
    m.calls = {{0.5, 0.5}, {1.0, 0.25}};
    if (barrier_price >= 0.0) m.barriers = {{1.5, barrier_price}};
    q.maturities.push_back(m);
    return q;
}

bool has_rule(const ValidationReport& r, const std::string& rule) {
    return std::any_of(r.violations.begin(), r.violations.end(),
                       [&](const Violation& v) { return v.rule.rfind(rule, 0) == 0; });
}

} // namespace

TEST_CASE("LP layout for one maturity, one strike, no quoted barrier") {
    MarketQuotes q;
    q.spot = 1.0;
    q.upper_bound = 1.5;
    q.maturities.push_back({1.0, {{0.5, 0.5}}, {}});
    auto grid = Grid::from_points({0.0, 0.5, 1.0, 1.5});

    CalibrationLp clp = build_lp(q, grid, {}, Feasibility{}, true);

    // hand-written matrix: u at 4 nodes, block at 3 nodes, the call quote
    // variable, 2 + 2 convexity slacks and 3 dominance slacks
    CHECK(clp.problem.num_vars() == 15);
    CHECK(clp.problem.num_rows() == 13);
    REQUIRE(clp.levels.size() == 1); // just N
    CHECK(clp.levels[0] == 1.5);
    REQUIRE(clp.u_col.size() == 1);
    CHECK(clp.u_col[0].size() == 4);
    REQUIRE(clp.v_col[0].size() == 1);
    CHECK(clp.v_col[0][0].size() == 3); // support ends at idx(N)
    CHECK(clp.beta[0].empty());
    REQUIRE(clp.qv_col[0].size() == 1);

    // boundary fixings: u(0) = S0, first slope -1, u(N) = 0
    const auto& p = clp.problem;
    CHECK(p.lo[clp.u_col[0][0]] == 1.0);
    CHECK(p.hi[clp.u_col[0][0]] == 1.0);
    CHECK(p.lo[clp.u_col[0][1]] == 0.5);
    CHECK(p.hi[clp.u_col[0][1]] == 0.5);
    CHECK(p.lo[clp.u_col[0][3]] == 0.0);
    CHECK(p.hi[clp.u_col[0][3]] == 0.0);

    // the single pin is the trailing row and references the quote variable
    REQUIRE(clp.pins.size() == 1);
    CHECK(clp.pins[0].row == 12);
    CHECK(clp.pins[0].kind == PinInfo::Kind::Call);
    CHECK(clp.pins[0].quote == 0.5);
    CHECK(p.rows[12].rhs == 0.5);
    REQUIRE(p.rows[12].coeffs.size() == 1);
    CHECK(p.rows[12].coeffs[0].first == clp.qv_col[0][0]);

    // dominance rows carry the (S0 - x)^+ constant on the right-hand side
    int dcmp = 0;
    for (const auto& row : p.rows)
        if (row.tag.rfind("DCMP", 0) == 0) {
            if (dcmp == 0) CHECK(row.rhs == 1.0);
            if (dcmp == 1) CHECK(row.rhs == 0.5);
            if (dcmp == 2) CHECK(row.rhs == 0.0);
            ++dcmp;
        }
    CHECK(dcmp == 3);

    CalibrationLp bare = build_lp(q, grid, {}, Feasibility{}, false);
    CHECK(bare.problem.num_rows() == 12);
    CHECK(bare.pins.empty());
    CHECK(bare.problem.num_vars() == 15); // quote variables stay, freely floating
}

TEST_CASE("interior barrier truncates the block support") {
    MarketQuotes q;
    q.spot = 1.0;
    q.upper_bound = 2.0;
    q.maturities.push_back({1.0, {{1.0, 0.25}}, {{1.5, 0.3}}});
    auto grid = Grid::build(q, 0); // {0, 1, 1.5, 2}
    CalibrationLp clp = build_lp(q, grid, {}, Feasibility{}, true);
    REQUIRE(clp.levels.size() == 2);
    CHECK(clp.levels[0] == 1.5);
    CHECK(clp.levels[1] == 2.0);
    CHECK(clp.v_col[0][0].size() == grid->index_of(1.5)); // zero beyond idx(B_1)
    CHECK(clp.v_col[0][1].size() == grid->index_of(2.0));
    REQUIRE(clp.beta[0].size() == 1);
    CHECK(clp.beta[0][0].pinned);
    CHECK(clp.beta[0][0].quote == 0.3);
}

TEST_CASE("build_lp rejects inconsistent inputs") {
    MarketQuotes q = model_a(0.5);
    auto wrong_grid = Grid::from_points({0.0, 0.5, 1.0, 2.0});
    CHECK_THROWS_AS(build_lp(q, wrong_grid, {}, Feasibility{}, true), std::invalid_argument);

    auto grid = Grid::build(q, 0);
    CHECK_THROWS_AS(build_lp(q, grid, {1.25}, Feasibility{}, true),
                    std::invalid_argument); // extra level off the grid
    CHECK_THROWS_AS(build_lp(q, Grid::build(q, 0, {0.75}), {0.75}, Feasibility{}, true),
                    std::invalid_argument); // extra level below spot

    CHECK_THROWS_AS(build_lp(q, grid, {}, LevelBound{1, 1.2, Side::Max}, true),
                    std::invalid_argument); // bound level absent from the LP
}

TEST_CASE("level bound objective targets exactly the requested level") {
    MarketQuotes q = model_a(); // no quoted barrier
    auto grid = Grid::build(q, 1, {1.25});
    CalibrationLp clp = build_lp(q, grid, {1.25}, LevelBound{1, 1.25, Side::Max}, true);
    int nonzero = 0;
    for (std::size_t c = 0; c < clp.problem.num_vars(); ++c)
        if (clp.problem.obj[c] != 0.0) {
            ++nonzero;
            CHECK(static_cast<int>(c) == clp.beta[0][0].col);
            CHECK(clp.problem.obj[c] == -1.0);
        }
    CHECK(nonzero == 1);
    CHECK(!clp.beta[0][0].pinned);
}

TEST_CASE("calibrating the two-point model pins every block") {
    CalibrationConfig cfg;
    cfg.refine = 0;
    CalibrationOutcome out = calibrate(model_a(0.5), cfg);
    REQUIRE(std::holds_alternative<Decomposition>(out));
    const Decomposition& d = std::get<Decomposition>(out);

    CHECK(d.meta.objective == "feasibility");
    CHECK(d.meta.tol_feas == 1e-8);
    REQUIRE(d.levels.size() == 2); // quoted 1.5 plus N = 1.5
    CHECK(d.levels[0] == 1.5);
    CHECK(d.levels[1] == 1.5);

    REQUIRE(d.touch.size() == 1);
    CHECK(d.touch[0][0] == 1.0);
    CHECK(d.touch[0][1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(d.touch[0][2] == doctest::Approx(0.5).epsilon(1e-9)); // mass at N

    const std::vector<double> want_u{1.0, 0.5, 0.25, 0.0};
    const std::vector<double> want_b2{0.75, 0.5, 0.25, 0.0};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(d.u[0].value_at_node(i) == doctest::Approx(want_u[i]).epsilon(1e-8));
        CHECK(d.blocks[0][0].value_at_node(i) == doctest::Approx(want_u[i]).epsilon(1e-8));
        CHECK(d.blocks[0][1].value_at_node(i) == doctest::Approx(want_b2[i]).epsilon(1e-8));
    }
    CHECK(check_conditions_multi(d, 1e-7).ok());
}

TEST_CASE("overpriced one-touch produces a confirmed certificate") {
    CalibrationConfig cfg;
    cfg.refine = 0;
    CalibrationOutcome out = calibrate(model_a(0.6), cfg);
    REQUIRE(std::holds_alternative<ArbitrageCertificate>(out));
    const ArbitrageCertificate& cert = std::get<ArbitrageCertificate>(out);
    CHECK(cert.confirmed);
    CHECK(cert.grid_certificate);
    CHECK(cert.gap >= 0.1 - 1e-6);
    CHECK(cert.market_price - cert.superrep_value ==
          doctest::Approx(cert.gap).epsilon(1e-12));

    // the overpriced digital is shorted: positive weight by convention
    bool digital_short = false;
    double max_abs = 0.0;
    for (const auto& le : cert.lambdas) {
        max_abs = std::max(max_abs, std::fabs(le.weight));
        if (le.kind == LambdaEntry::Kind::Digital) {
            CHECK(le.strike_or_level == doctest::Approx(1.5));
            CHECK(le.weight > 0.0);
            digital_short = true;
        }
    }
    CHECK(digital_short);
    CHECK(max_abs == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("no barriers reduces to call-strip feasibility") {
    CalibrationConfig cfg;
    cfg.refine = 2;
    CalibrationOutcome out = calibrate(model_a(), cfg);
    REQUIRE(std::holds_alternative<Decomposition>(out));
    const Decomposition& d = std::get<Decomposition>(out);
    REQUIRE(d.levels.size() == 1);
    CHECK(d.levels[0] == 1.5);
    REQUIRE(d.blocks[0].size() == 1);
    CHECK(check_conditions_multi(d, 1e-7).ok());
    // the single block is the call curve itself
    for (std::size_t i = 0; i < d.grid->size(); ++i)
        CHECK(d.blocks[0][0].value_at_node(i) ==
              doctest::Approx(d.u[0].value_at_node(i)).epsilon(1e-9));
}

TEST_CASE("frak assembly: empty sum, terminal identity, reference values") {
    CalibrationConfig cfg;
    cfg.refine = 0;
    const Decomposition d = std::get<Decomposition>(calibrate(model_a(0.5), cfg));

    PLConvex f1 = assemble_frak_c(d, 1, 1);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(f1.value_at_node(i) ==
              doctest::Approx(d.blocks[0][0].value_at_node(i)).epsilon(1e-12));
    const std::vector<double> want{1.0, 0.5, 0.25, 0.0};
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(f1.value_at_node(i) == doctest::Approx(want[i]).epsilon(1e-8));

    PLConvex f2 = assemble_frak_c(d, 1, 2);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(f2.value_at_node(i) == doctest::Approx(d.u[0].value_at_node(i)).epsilon(1e-10));

    CHECK_THROWS_AS(assemble_frak_c(d, 1, 3), std::out_of_range);
    CHECK_THROWS_AS(assemble_frak_c(d, 2, 1), std::out_of_range);
}

TEST_CASE("single- and multi-maturity characterizations are mutually inverse") {
    CalibrationConfig cfg;
    cfg.refine = 1;
    const Decomposition d = std::get<Decomposition>(calibrate(model_a(0.5), cfg));

    FrakFamily f = multi_to_single(d, 1);
    REQUIRE(f.fraks.size() == d.levels.size());
    CHECK(check_conditions_single(f, 1e-7).ok());

    std::vector<PLConvex> blocks = single_to_multi(f);
    REQUIRE(blocks.size() == d.blocks[0].size());
    for (std::size_t j = 0; j < blocks.size(); ++j)
        for (std::size_t i = 0; i < d.grid->size(); ++i)
            CHECK(blocks[j].value_at_node(i) ==
                  doctest::Approx(d.blocks[0][j].value_at_node(i)).epsilon(1e-10).scale(1.0));
}

TEST_CASE("ordering violation in the frak family is caught by both checkers") {
    CalibrationConfig cfg;
    cfg.refine = 0;
    const Decomposition d = std::get<Decomposition>(calibrate(model_a(0.5), cfg));
    FrakFamily f = multi_to_single(d, 1);

    // push frak^{B_1} above frak^{B_2} at one node
    std::vector<double> vals = f.fraks[0].values();
    vals[2] += 0.05;
    f.fraks[0] = PLConvex(f.grid, vals);

    ValidationReport rs = check_conditions_single(f, 1e-9);
    CHECK(has_rule(rs, "COND_2"));

    Decomposition d2 = d;
    d2.blocks[0] = single_to_multi(f);
    ValidationReport rm = check_conditions_multi(d2, 1e-9);
    CHECK(has_rule(rm, "COND_D"));
}

TEST_CASE("condition checker flags seeded defects") {
    CalibrationConfig cfg;
    cfg.refine = 0;
    const Decomposition base = std::get<Decomposition>(calibrate(model_a(0.5), cfg));

    CHECK(check_conditions_multi(base, 1e-9).ok());

    Decomposition worse = base;
    std::vector<double> v = worse.blocks[0][1].values();
    v[1] += 1e-3;
    worse.blocks[0][1] = PLConvex(worse.grid, v);
    ValidationReport r = check_conditions_multi(worse, 1e-7);
    CHECK(!r.ok()); // convexity or sum identity must notice
    CHECK((has_rule(r, "COND_A") || has_rule(r, "COND_E") || has_rule(r, "COND_B")));

    Decomposition wrong_touch = base;
    wrong_touch.touch[0][1] = 0.45;
    ValidationReport r2 = check_conditions_multi(wrong_touch, 1e-7);
    CHECK(has_rule(r2, "B_PIN"));
}

TEST_CASE("identical quotes at two maturities calibrate with ordered curves") {
    MarketQuotes q = model_a(0.5);
    MaturityQuotes second = q.maturities[0];
    second.t = 2.0;
    q.maturities.push_back(second);

    CalibrationConfig cfg;
    cfg.refine = 1;
    CalibrationOutcome out = calibrate(q, cfg);
    REQUIRE(std::holds_alternative<Decomposition>(out));
    const Decomposition& d = std::get<Decomposition>(out);
    REQUIRE(d.maturity_count() == 2);
    CHECK(check_conditions_multi(d, 1e-7).ok());
    for (std::size_t i = 0; i < d.grid->size(); ++i)
        CHECK(d.u[1].value_at_node(i) >= d.u[0].value_at_node(i) - 1e-9);
}

TEST_CASE("chain models calibrate and their direct decompositions verify") {
    for (std::uint64_t seed : {11u, 23u, 42u}) {
        testutil::ChainModel cm = testutil::random_chain_model(seed);
        CAPTURE(seed);
        REQUIRE(!validate(cm.quotes).has_fatal());

        Decomposition direct = testutil::chain_decomposition(cm, 0);
        CHECK(check_conditions_multi(direct, 1e-9).ok());

        CalibrationConfig cfg;
        cfg.refine = 1;
        CalibrationOutcome out = calibrate(cm.quotes, cfg);
        REQUIRE(std::holds_alternative<Decomposition>(out));
        const Decomposition& d = std::get<Decomposition>(out);
        CHECK(check_conditions_multi(d, 1e-7).ok());

        // quotes reproduced
        for (std::size_t l = 0; l < cm.k; ++l) {
            for (const auto& c : cm.quotes.maturities[l].calls)
                CHECK(d.u[l].value_at_node(d.grid->index_of(c.strike)) ==
                      doctest::Approx(c.price).epsilon(1e-7).scale(1.0));
            for (const auto& b : cm.quotes.maturities[l].barriers) {
                bool matched = false;
                for (std::size_t j = 1; j + 1 <= d.levels.size(); ++j)
                    if (std::fabs(d.levels[j - 1] - b.level) <= 1e-9) {
                        CHECK(d.touch[l][j] == doctest::Approx(b.price).epsilon(1e-7).scale(1.0));
                        matched = true;
                    }
                CHECK(matched);
            }
        }
    }
}

TEST_CASE("maturity ordering violations are caught on chain decompositions") {
    testutil::ChainModel cm;
    for (std::uint64_t seed = 1;; ++seed) {
        cm = testutil::random_chain_model(seed);
        if (cm.k == 2) break;
    }
    Decomposition d = testutil::chain_decomposition(cm, 0);
    REQUIRE(check_conditions_multi(d, 1e-9).ok());

    std::vector<double> vals = d.u[1].values();
    std::size_t mid = vals.size() / 2;
    vals[mid] = std::max(0.0, d.u[0].value_at_node(mid) - 0.02);
    d.u[1] = PLConvex(d.grid, vals);
    ValidationReport r = check_conditions_multi(d, 1e-7);
    CHECK(!r.ok());
}
