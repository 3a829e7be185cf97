#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maxcal/joint_law.hpp"
#include "maxcal/pricing.hpp"
#include "support/pmf_oracle.hpp"
#include "support/random_models.hpp"

#include <cmath>
#include <stdexcept>
#include <variant>

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

Decomposition model_a_decomposition(double barrier_price, int refine = 0) {
    CalibrationConfig cfg;
    cfg.refine = refine;
    return std::get<Decomposition>(calibrate(model_a(barrier_price), cfg));
}

std::vector<double> sample_put(const Grid& g, double K) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::max(K - g[i], 0.0);
    return v;
}

std::vector<double> sample_call(const Grid& g, double K) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::max(g[i] - K, 0.0);
    return v;
}

} // namespace

TEST_CASE("closed-form up-and-out prices on the two-point model") {
    Decomposition d = model_a_decomposition(0.5);
    REQUIRE(d.level_count() == 2);

    CHECK(up_and_out_put(d, 1, 1, 1.0) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(up_and_out_call(d, 1, 1, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

    // strikes at or above the barrier knock the call out entirely
    CHECK(up_and_out_call(d, 1, 1, 1.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(up_and_out_call(d, 1, 1, 2.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    // zero strike: the put is worthless, the call is the stopped forward
    CHECK(up_and_out_put(d, 1, 1, 0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(up_and_out_call(d, 1, 1, 0.0) ==
          doctest::Approx(1.0 - 1.5 * 0.5).epsilon(1e-9)); // S0 - B*b

    // boundary identity at K = B_j, for the quoted level and the terminal one
    CHECK(up_and_out_put(d, 1, 1, 1.5) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(up_and_out_put(d, 1, 2, 1.5) == doctest::Approx(0.5).epsilon(1e-9));

    CHECK_THROWS_AS(up_and_out_put(d, 0, 1, 1.0), std::out_of_range);
    CHECK_THROWS_AS(up_and_out_put(d, 2, 1, 1.0), std::out_of_range);
    CHECK_THROWS_AS(up_and_out_put(d, 1, 0, 1.0), std::out_of_range);
    CHECK_THROWS_AS(up_and_out_put(d, 1, 3, 1.0), std::out_of_range);
    CHECK_THROWS_AS(up_and_out_put(d, 1, 1, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(up_and_out_call(d, 2, 1, 1.0), std::out_of_range);
    CHECK_THROWS_AS(up_and_out_call(d, 1, 3, 1.0), std::out_of_range);
    CHECK_THROWS_AS(up_and_out_call(d, 1, 1, -0.1), std::invalid_argument);
}

TEST_CASE("stopped put-call parity") {
    Decomposition d = model_a_decomposition(0.5);
    const double S0 = d.quotes.spot;
    for (std::size_t j = 1; j <= d.level_count(); ++j) {
        const double B = d.levels[j - 1];
        const double b = d.touch[0][j];
        for (double K : {0.0, 0.3, 0.5, 0.8, 1.0, 1.25, 1.5, 1.9}) {
            const double lhs = up_and_out_call(d, 1, j, K) - up_and_out_put(d, 1, j, K);
            const double rhs = S0 - B * b - K * (1.0 - b);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("up-and-out prices match the generating chain exactly") {
    for (std::uint64_t seed : {7u, 13u, 21u}) {
        CAPTURE(seed);
        testutil::ChainModel cm = testutil::random_chain_model(seed);
        Decomposition d = testutil::chain_decomposition(cm, 0);
        const Grid& g = *d.grid;
        for (std::size_t l = 1; l <= d.maturity_count(); ++l) {
            for (std::size_t j = 1; j <= d.level_count(); ++j) {
                const double B = d.levels[j - 1];
                for (std::size_t i = 0; i < g.size(); ++i) {
                    // midpoints probe the piecewise-linear interpolation too
                    for (double K : {g[i],
                                     i + 1 < g.size() ? 0.5 * (g[i] + g[i + 1])
                                                      : g[i]}) {
                        CAPTURE(l);
                        CAPTURE(j);
                        CAPTURE(K);
                        CHECK(up_and_out_put(d, l, j, K) ==
                              doctest::Approx(cm.uo_put(l, B, K)).epsilon(1e-9).scale(1.0));
                        CHECK(up_and_out_call(d, l, j, K) ==
                              doctest::Approx(cm.uo_call(l, B, K)).epsilon(1e-9).scale(1.0));
                    }
                }
            }
        }
    }
}

TEST_CASE("payoff_value reproduces closed forms") {
    Decomposition d = model_a_decomposition(0.5);
    const Grid& g = *d.grid;

    PayoffSpec uo_put_spec;
    uo_put_spec.maturity = 1;
    uo_put_spec.legs = {{1, 1, sample_put(g, 1.0)}};
    CHECK(payoff_value(d, uo_put_spec) == doctest::Approx(0.25).epsilon(1e-9));

    PayoffSpec digital;
    digital.maturity = 1;
    digital.legs = {{2, 2, std::vector<double>(g.size(), 1.0)}};
    CHECK(payoff_value(d, digital) == doctest::Approx(0.5).epsilon(1e-9));

    PayoffSpec call;
    call.maturity = 1;
    call.legs = {{1, 2, sample_call(g, 0.5)}};
    CHECK(payoff_value(d, call) == doctest::Approx(0.5).epsilon(1e-9));

    PayoffSpec bad = call;
    bad.maturity = 2;
    CHECK_THROWS_AS(payoff_value(d, bad), std::out_of_range);
    bad = call;
    bad.legs[0].band_hi = 3;
    CHECK_THROWS_AS(payoff_value(d, bad), std::invalid_argument);
    bad = call;
    bad.legs[0].band_lo = 2;
    bad.legs[0].band_hi = 1;
    CHECK_THROWS_AS(payoff_value(d, bad), std::invalid_argument);
    bad = call;
    bad.legs[0].node_values.pop_back();
    CHECK_THROWS_AS(payoff_value(d, bad), std::invalid_argument);
}

TEST_CASE("one-touch bounds at the support bound are forced") {
    MarketQuotes q = model_a();
    CalibrationConfig cfg;
    cfg.refine = 0;

    for (Side side : {Side::Max, Side::Min}) {
        auto res = robust_barrier_bounds(q, cfg, 1, 1.5, side);
        REQUIRE(std::holds_alternative<BoundResult>(res));
        const BoundResult& b = std::get<BoundResult>(res);
        CHECK(b.side == side);
        CHECK(b.value == doctest::Approx(0.5).epsilon(1e-7));
        CHECK(check_conditions_multi(b.achieved_by, 1e-7).ok());
        CHECK(!b.dual_prices.empty());
        for (const auto& dp : b.dual_prices) CHECK(std::isfinite(dp.dual));

        auto grid = Grid::build(q, cfg.refine, {1.5});
        testutil::OracleBound ob = testutil::oracle_touch_bound(q, grid, {1.5}, 1, 1.5, side);
        REQUIRE(ob.feasible);
        CHECK(b.value == doctest::Approx(ob.value).epsilon(1e-7));
    }
}

TEST_CASE("one-touch bounds at an interior level are forced by the hit-time identity") {
    // Stopping the stopped-at-1.25 process: E[S 1{M < 1.25}] + 1.25 P(M >= 1.25)
    // must equal S0, which pins P(M >= 1.25) = 2/3 for the two-point marginal.
    MarketQuotes q = model_a();
    CalibrationConfig cfg;
    cfg.refine = 0;

    for (Side side : {Side::Max, Side::Min}) {
        auto res = robust_barrier_bounds(q, cfg, 1, 1.25, side);
        REQUIRE(std::holds_alternative<BoundResult>(res));
        const BoundResult& b = std::get<BoundResult>(res);
        CHECK(b.value == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
        CHECK(check_conditions_multi(b.achieved_by, 1e-7).ok());

        auto grid = Grid::build(q, cfg.refine, {1.25});
        testutil::OracleBound ob = testutil::oracle_touch_bound(q, grid, {1.25}, 1, 1.25, side);
        REQUIRE(ob.feasible);
        CHECK(ob.value == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
        CHECK(b.value == doctest::Approx(ob.value).epsilon(1e-7));
    }
}

TEST_CASE("robust bound argument validation") {
    CalibrationConfig cfg;
    cfg.refine = 0;
    MarketQuotes q = model_a();
    CHECK_THROWS_AS(robust_barrier_bounds(q, cfg, 1, 0.9, Side::Max), std::invalid_argument);
    CHECK_THROWS_AS(robust_barrier_bounds(q, cfg, 1, 1.0, Side::Max), std::invalid_argument);
    CHECK_THROWS_AS(robust_barrier_bounds(q, cfg, 1, 1.7, Side::Max), std::invalid_argument);
    CHECK_THROWS_AS(robust_barrier_bounds(q, cfg, 2, 1.25, Side::Max), std::out_of_range);

    MarketQuotes qb = model_a(0.5);
    CHECK_THROWS_AS(robust_barrier_bounds(qb, cfg, 1, 1.5, Side::Max), std::invalid_argument);
}

TEST_CASE("bounds on infeasible quotes return certificates") {
    MarketQuotes q = model_a(0.6); // priced above the forced touch probability
    CalibrationConfig cfg;
    cfg.refine = 0;

    auto res = robust_barrier_bounds(q, cfg, 1, 1.25, Side::Max);
    REQUIRE(std::holds_alternative<ArbitrageCertificate>(res));
    const ArbitrageCertificate& cert = std::get<ArbitrageCertificate>(res);
    CHECK(cert.confirmed);
    // the gap scales with the (normalized) weight sold on the overpriced digital
    double wd = 0.0;
    for (const auto& e : cert.lambdas)
        if (e.kind == LambdaEntry::Kind::Digital) wd = std::fabs(e.weight);
    CHECK(wd > 0.0);
    CHECK(cert.gap >= 0.1 * wd - 1e-6);

    PayoffSpec digital;
    digital.maturity = 1;
    digital.legs = {{1, 1, std::vector<double>(Grid::build(q, 0)->size(), 1.0)}};
    auto res2 = price_bound(q, cfg, digital, Side::Max);
    REQUIRE(std::holds_alternative<ArbitrageCertificate>(res2));
    CHECK(std::get<ArbitrageCertificate>(res2).confirmed);
}

TEST_CASE("price bounds pin quoted instruments") {
    MarketQuotes q = model_a(0.5);
    CalibrationConfig cfg;
    cfg.refine = 0;
    auto grid = Grid::build(q, cfg.refine);

    PayoffSpec call;
    call.maturity = 1;
    call.legs = {{1, 2, sample_call(*grid, 0.5)}};

    PayoffSpec digital;
    digital.maturity = 1;
    digital.legs = {{2, 2, std::vector<double>(grid->size(), 1.0)}};

    PayoffSpec uo_put_spec;
    uo_put_spec.maturity = 1;
    uo_put_spec.legs = {{1, 1, sample_put(*grid, 1.0)}};

    struct Case {
        const PayoffSpec* payoff;
        double expect;
    } cases[] = {{&call, 0.5}, {&digital, 0.5}, {&uo_put_spec, 0.25}};

    for (const auto& c : cases) {
        for (Side side : {Side::Max, Side::Min}) {
            auto res = price_bound(q, cfg, *c.payoff, side);
            REQUIRE(std::holds_alternative<BoundResult>(res));
            const BoundResult& b = std::get<BoundResult>(res);
            CHECK(b.value == doctest::Approx(c.expect).epsilon(1e-7));
            CHECK(payoff_value(b.achieved_by, *c.payoff) ==
                  doctest::Approx(b.value).epsilon(1e-7));

            testutil::OracleBound ob = testutil::oracle_payoff_bound(q, grid, *c.payoff, side);
            REQUIRE(ob.feasible);
            CHECK(b.value == doctest::Approx(ob.value).epsilon(1e-7).scale(1.0));
        }
    }
}

TEST_CASE("price bounds bracket the generating model on random chains") {
    for (std::uint64_t seed : {11u, 23u}) {
        CAPTURE(seed);
        testutil::ChainModel cm = testutil::random_chain_model(seed);
        CalibrationConfig cfg;
        cfg.refine = 0;
        auto grid = Grid::build(cm.quotes, cfg.refine);
        Decomposition d0 = testutil::chain_decomposition(cm, 0);

        // up-and-out put below the first level, struck mid-grid
        const double B1 = d0.levels.front();
        std::size_t mid = 1;
        while (mid + 1 < grid->size() && (*grid)[mid + 1] < B1) ++mid;
        const double K = (*grid)[std::max<std::size_t>(mid / 2 + 1, 1)];

        PayoffSpec spec;
        spec.maturity = 1;
        spec.legs = {{1, 1, sample_put(*grid, K)}};

        double lo = 0.0, hi = 0.0;
        for (Side side : {Side::Max, Side::Min}) {
            auto res = price_bound(cm.quotes, cfg, spec, side);
            REQUIRE(std::holds_alternative<BoundResult>(res));
            const BoundResult& b = std::get<BoundResult>(res);
            CHECK(payoff_value(b.achieved_by, spec) == doctest::Approx(b.value).epsilon(1e-7));

            testutil::OracleBound ob = testutil::oracle_payoff_bound(cm.quotes, grid, spec, side);
            REQUIRE(ob.feasible);
            CHECK(b.value == doctest::Approx(ob.value).epsilon(1e-7).scale(1.0));
            (side == Side::Max ? hi : lo) = b.value;
        }
        CHECK(lo <= hi + 1e-9);
        const double model_value = cm.uo_put(1, B1, K);
        CHECK(model_value >= lo - 1e-7);
        CHECK(model_value <= hi + 1e-7);
    }
}

TEST_CASE("price bound rejects malformed payoffs") {
    MarketQuotes q = model_a(0.5);
    CalibrationConfig cfg;
    cfg.refine = 0;
    auto grid = Grid::build(q, cfg.refine);

    PayoffSpec bad;
    bad.maturity = 1;
    bad.legs = {{1, 5, std::vector<double>(grid->size(), 1.0)}};
    CHECK_THROWS_AS(price_bound(q, cfg, bad, Side::Max), std::invalid_argument);

    bad.legs = {{1, 1, std::vector<double>(grid->size() - 1, 1.0)}};
    CHECK_THROWS_AS(price_bound(q, cfg, bad, Side::Max), std::invalid_argument);

    bad.maturity = 3;
    bad.legs = {{1, 1, std::vector<double>(grid->size(), 1.0)}};
    CHECK_THROWS_AS(price_bound(q, cfg, bad, Side::Max), std::invalid_argument);
}
