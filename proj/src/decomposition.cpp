#include "maxcal/decomposition.hpp"

#include "maxcal/json_writer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace maxcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLevelTol = 1e-9;

std::string itag(const char* base, std::size_t a, std::size_t b) {
    return std::string(base) + "[" + std::to_string(a) + "][" + std::to_string(b) + "]";
}
std::string itag(const char* base, std::size_t a, std::size_t b, std::size_t c) {
    return std::string(base) + "[" + std::to_string(a) + "][" + std::to_string(b) + "][" +
           std::to_string(c) + "]";
}
std::string vtag(const char* base, std::size_t a, double v) {
    return std::string(base) + "[" + std::to_string(a) + "][" + fmt_g(v) + "]";
}

struct Builder {
    const MarketQuotes& q;
    CalibrationLp clp;
    const Grid* g = nullptr;
    std::size_t G = 0; // last node index
    std::size_t M = 0; // quoted/extra levels (B_1..B_M); level M+1 is N
    std::vector<std::size_t> pidx; // grid index of B_j, j = 1..M+1 (0-based entry j-1)

    explicit Builder(const MarketQuotes& quotes) : q(quotes) {}

    double h(std::size_t i) const { return g->spacing(i); }
    double x(std::size_t i) const { return (*g)[i]; }

    int slack(const std::string& row_tag) {
        return clp.problem.add_var("s_" + row_tag, 0.0, kInf, 0.0);
    }

    // b_l(B_j) as a column reference; j in 1..M (j = 0 and M+1 never queried here)
    const BetaRef& bref(std::size_t l, std::size_t j) const { return clp.beta[l][j - 1]; }

    void make_levels(const std::vector<double>& extra_levels) {
        std::vector<double> lv;
        for (const auto& mat : q.maturities)
            for (const auto& b : mat.barriers) lv.push_back(b.level);
        for (double e : extra_levels) lv.push_back(e);
        std::sort(lv.begin(), lv.end());
        lv.erase(std::unique(lv.begin(), lv.end(),
                             [](double a, double b) { return std::fabs(a - b) <= kLevelTol; }),
                 lv.end());
        for (double b : lv) {
            if (b <= q.spot + kLevelTol || b > g->upper() + kLevelTol)
                throw std::invalid_argument("barrier level " + fmt_g(b) +
                                            " outside (spot, upper bound]");
        }
        M = lv.size();
        lv.push_back(g->upper()); // derived level B_{M+1} = N, always present
        clp.levels = std::move(lv);
        pidx.clear();
        for (double b : clp.levels) pidx.push_back(g->index_of(b));
    }

    void make_variables() {
        const double S0 = q.spot;
        const std::size_t k = q.maturities.size();
        clp.u_col.assign(k, {});
        clp.v_col.assign(k, {});
        clp.beta.assign(k, {});
        for (std::size_t l = 0; l < k; ++l) {
            auto& ucols = clp.u_col[l];
            ucols.resize(G + 1);
            for (std::size_t i = 0; i <= G; ++i) {
                double lo = 0.0, hi = S0;
                if (i == 0) lo = hi = S0;
                if (i == 1) lo = hi = S0 - h(0);
                if (i == G) lo = hi = 0.0;
                ucols[i] = clp.problem.add_var(itag("u", l + 1, i), lo, hi);
            }
            clp.v_col[l].resize(M + 1);
            for (std::size_t j = 1; j <= M + 1; ++j) {
                const std::size_t P = pidx[j - 1];
                auto& vcols = clp.v_col[l][j - 1];
                vcols.resize(P);
                for (std::size_t i = 0; i < P; ++i) {
                    double lo = 0.0, hi = S0;
                    if (j == 1 && i == 0) lo = hi = S0;
                    if (j == 1 && i == 1) lo = hi = S0 - h(0);
                    vcols[i] = clp.problem.add_var(itag("v", l + 1, j, i), lo, hi);
                }
            }
            clp.beta[l].resize(M);
            for (std::size_t j = 1; j <= M; ++j) {
                const double level = clp.levels[j - 1];
                const BarrierQuote* quoted = nullptr;
                for (const auto& b : q.maturities[l].barriers)
                    if (std::fabs(b.level - level) <= kLevelTol) quoted = &b;
                BetaRef ref;
                if (quoted) {
                    ref.pinned = true;
                    ref.quote = quoted->price;
                    ref.col = clp.problem.add_var(vtag("qb", l + 1, level), -kInf, kInf);
                } else {
                    ref.col = clp.problem.add_var(vtag("beta", l + 1, level), 0.0, 1.0);
                }
                clp.beta[l][j - 1] = ref;
            }
        }
    }

    // call-curve structure: convexity, strike links, calendar ordering
    void make_u_rows(std::vector<std::vector<int>>& qv_cols) {
        const std::size_t k = q.maturities.size();
        qv_cols.assign(k, {});
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t i = 1; i <= G - 1; ++i) {
                const std::string tag = itag("UCVX", l + 1, i);
                clp.problem.add_row(tag, 0.0,
                                    {{clp.u_col[l][i + 1], h(i - 1)},
                                     {clp.u_col[l][i], -(h(i - 1) + h(i))},
                                     {clp.u_col[l][i - 1], h(i)},
                                     {slack(tag), -1.0}});
            }
            for (const auto& c : q.maturities[l].calls) {
                const int qv = clp.problem.add_var(vtag("qv", l + 1, c.strike), -kInf, kInf);
                qv_cols[l].push_back(qv);
                clp.problem.add_row(vtag("LINK", l + 1, c.strike), 0.0,
                                    {{clp.u_col[l][g->index_of(c.strike)], 1.0}, {qv, -1.0}});
            }
            if (l > 0) {
                for (std::size_t i = 2; i <= G - 1; ++i) {
                    const std::string tag = itag("UCAL", l + 1, i);
                    clp.problem.add_row(tag, 0.0,
                                        {{clp.u_col[l][i], 1.0},
                                         {clp.u_col[l - 1][i], -1.0},
                                         {slack(tag), -1.0}});
                }
            }
        }
    }

    void make_block_rows() {
        const std::size_t k = q.maturities.size();
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t j = 1; j <= M + 1; ++j) {
                const std::size_t P = pidx[j - 1];
                const auto& v = clp.v_col[l][j - 1];

                if (j >= 2) {
                    const double Bprev = clp.levels[j - 2];
                    const int bp = bref(l, j - 1).col;
                    clp.problem.add_row(itag("BVAL", l + 1, j), 0.0,
                                        {{v[0], 1.0}, {bp, -Bprev}});
                    clp.problem.add_row(itag("BSLP", l + 1, j), 0.0,
                                        {{v[1], 1.0}, {v[0], -1.0}, {bp, h(0)}});
                }

                if (j <= M) {
                    clp.problem.add_row(itag("CSLP", l + 1, j), 0.0,
                                        {{v[P - 1], 1.0}, {bref(l, j).col, -h(P - 1)}});
                } else {
                    clp.problem.add_row(itag("CSLP", l + 1, j), 0.0,
                                        {{v[G - 1], 1.0}, {clp.u_col[l][G - 1], -1.0}});
                }

                for (std::size_t i = 1; i <= P - 1; ++i) {
                    const std::string tag = itag("ACVX", l + 1, j, i);
                    std::vector<std::pair<int, double>> co;
                    if (i + 1 < P) co.emplace_back(v[i + 1], h(i - 1));
                    co.emplace_back(v[i], -(h(i - 1) + h(i)));
                    co.emplace_back(v[i - 1], h(i));
                    co.emplace_back(slack(tag), -1.0);
                    clp.problem.add_row(tag, 0.0, std::move(co));
                }

                // calendar dominance; maturity 0 has c_0 = 0 and b_0 = 0
                const double Bprev = j >= 2 ? clp.levels[j - 2] : q.spot;
                for (std::size_t i = 0; i < P; ++i) {
                    const double w = std::max(Bprev - x(i), 0.0);
                    const std::string tag = itag("DCMP", l + 1, j, i);
                    std::vector<std::pair<int, double>> co;
                    double rhs = 0.0;
                    co.emplace_back(v[i], 1.0);
                    if (l > 0) co.emplace_back(clp.v_col[l - 1][j - 1][i], -1.0);
                    if (w > 0.0) {
                        if (j >= 2) {
                            co.emplace_back(bref(l, j - 1).col, -w);
                            if (l > 0) co.emplace_back(bref(l - 1, j - 1).col, w);
                        } else if (l == 0) {
                            rhs = w; // (b_1 - b_0)(B_0) = 1 against maturity zero
                        }
                    }
                    co.emplace_back(slack(tag), -1.0);
                    clp.problem.add_row(tag, rhs, std::move(co));
                }
            }

            for (std::size_t i = 0; i <= G - 1; ++i) {
                std::vector<std::pair<int, double>> co;
                for (std::size_t j = 1; j <= M; ++j) {
                    if (i < pidx[j - 1]) co.emplace_back(clp.v_col[l][j - 1][i], 1.0);
                    const double w = std::max(clp.levels[j - 1] - x(i), 0.0);
                    if (w > 0.0) co.emplace_back(bref(l, j).col, -w);
                }
                if (i < pidx[M]) co.emplace_back(clp.v_col[l][M][i], 1.0);
                co.emplace_back(clp.u_col[l][i], -1.0);
                clp.problem.add_row(itag("ESUM", l + 1, i), 0.0, std::move(co));
            }
        }
    }

    void make_pins(const std::vector<std::vector<int>>& qv_cols) {
        const std::size_t k = q.maturities.size();
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t ci = 0; ci < q.maturities[l].calls.size(); ++ci) {
                const auto& c = q.maturities[l].calls[ci];
                PinInfo pin;
                pin.kind = PinInfo::Kind::Call;
                pin.maturity = l + 1;
                pin.strike_or_level = c.strike;
                pin.quote = c.price;
                pin.row = clp.problem.num_rows();
                clp.problem.add_row(vtag("PIN_V", l + 1, c.strike), c.price,
                                    {{qv_cols[l][ci], 1.0}});
                clp.pins.push_back(pin);
            }
        }
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t j = 1; j <= M; ++j) {
                const BetaRef& ref = bref(l, j);
                if (!ref.pinned) continue;
                PinInfo pin;
                pin.kind = PinInfo::Kind::Digital;
                pin.maturity = l + 1;
                pin.strike_or_level = clp.levels[j - 1];
                pin.quote = ref.quote;
                pin.row = clp.problem.num_rows();
                clp.problem.add_row(vtag("PIN_B", l + 1, clp.levels[j - 1]), ref.quote,
                                    {{ref.col, 1.0}});
                clp.pins.push_back(pin);
            }
        }
    }

    // objective = sum of slope jumps of every u and block function; the
    // convexity slacks are h-scaled jumps, so weight each by 1/(h_i h_{i-1})
    void apply_regularize() {
        auto& p = clp.problem;
        for (std::size_t col = 0; col < p.num_vars(); ++col) {
            const std::string& t = p.var_tags[col];
            if (t.rfind("s_UCVX", 0) == 0 || t.rfind("s_ACVX", 0) == 0) {
                const std::size_t i = parse_last_index(t);
                p.obj[col] = 1.0 / (h(i - 1) * h(i));
            }
        }
    }

    static std::size_t parse_last_index(const std::string& tag) {
        const auto rb = tag.rfind('[');
        return static_cast<std::size_t>(std::stoul(tag.substr(rb + 1)));
    }

    void apply_level_bound(const LevelBound& lb) {
        if (lb.maturity < 1 || lb.maturity > q.maturities.size())
            throw std::invalid_argument("level bound: maturity out of range");
        const std::size_t l = lb.maturity - 1;
        for (std::size_t j = 1; j <= M; ++j) {
            if (std::fabs(clp.levels[j - 1] - lb.level) <= kLevelTol) {
                clp.problem.obj[bref(l, j).col] = lb.side == Side::Max ? -1.0 : 1.0;
                return;
            }
        }
        throw std::invalid_argument("level bound: level " + fmt_g(lb.level) +
                                    " not present in the LP");
    }

    // accumulates sign * sum_i phi(x_i) * atom_i(band j) into the objective
    void add_band_payoff(std::size_t l, std::size_t j, const std::vector<double>& phi,
                         double sign) {
        auto& obj = clp.problem.obj;
        const auto& v = clp.v_col[l][j - 1];
        const std::size_t P = pidx[j - 1];
        const bool last_band = j == M + 1;
        const std::size_t imax = last_band ? G : P - 1;
        for (std::size_t i = 1; i <= imax; ++i) {
            const double w = sign * phi[i];
            if (w == 0.0) continue;
            // atom_i = right_slope(i) - left_slope(i) of the band function;
            // node values at index >= P are identically zero
            if (i + 1 <= imax || (!last_band && i + 1 == P)) {
                if (i + 1 < P) obj[v[i + 1]] += w / h(i);
                if (i < P) obj[v[i]] -= w / h(i);
            }
            if (i < P) obj[v[i]] -= w / h(i - 1);
            if (i - 1 < P) obj[v[i - 1]] += w / h(i - 1);
        }
    }

    void apply_payoff_bound(const PayoffBound& pb) {
        if (pb.payoff.maturity < 1 || pb.payoff.maturity > q.maturities.size())
            throw std::invalid_argument("payoff bound: maturity out of range");
        const std::size_t l = pb.payoff.maturity - 1;
        const double sign = pb.side == Side::Max ? -1.0 : 1.0;
        for (const auto& leg : pb.payoff.legs) {
            if (leg.band_lo < 1 || leg.band_hi > M + 1 || leg.band_lo > leg.band_hi)
                throw std::invalid_argument("payoff bound: band range invalid");
            if (leg.node_values.size() != G + 1)
                throw std::invalid_argument("payoff bound: node values must match the grid");
            for (std::size_t j = leg.band_lo; j <= leg.band_hi; ++j)
                add_band_payoff(l, j, leg.node_values, sign);
        }
    }
};

} // namespace

CalibrationLp build_lp(const MarketQuotes& q, std::shared_ptr<const Grid> grid,
                       const std::vector<double>& extra_levels, const ObjectiveSpec& objective,
                       bool include_pins) {
    if (!grid) throw std::invalid_argument("build_lp: null grid");
    if (q.maturities.empty()) throw std::invalid_argument("build_lp: no maturities");
    if (std::fabs(grid->upper() - q.upper_bound) > kLevelTol)
        throw std::invalid_argument("build_lp: grid upper bound does not match quotes");

    Builder b(q);
    b.g = grid.get();
    b.G = grid->size() - 1;
    b.clp.grid = grid;
    b.clp.spot = q.spot;
    b.clp.k = q.maturities.size();
    b.make_levels(extra_levels);
    b.make_variables();
    std::vector<std::vector<int>> qv_cols;
    b.make_u_rows(qv_cols);
    b.make_block_rows();
    b.clp.qv_col = qv_cols;
    if (include_pins) b.make_pins(qv_cols);

    if (std::holds_alternative<Regularize>(objective)) b.apply_regularize();
    else if (const auto* lb = std::get_if<LevelBound>(&objective)) b.apply_level_bound(*lb);
    else if (const auto* pb = std::get_if<PayoffBound>(&objective)) b.apply_payoff_bound(*pb);

    return std::move(b.clp);
}

Decomposition extract_decomposition(const CalibrationLp& clp, const LpSolution& sol,
                                    const MarketQuotes& q, const std::string& objective_name) {
    if (sol.status != LpStatus::Optimal)
        throw std::invalid_argument("extract_decomposition: solution is not optimal");
    const std::size_t G = clp.grid->size() - 1;
    const std::size_t M = clp.levels.size() - 1;
    Decomposition d;
    d.grid = clp.grid;
    d.quotes = q;
    d.levels = clp.levels;
    d.meta.objective = objective_name;
    d.meta.iterations = sol.iterations;

    const double hlast = clp.grid->spacing(G - 1);
    for (std::size_t l = 0; l < clp.k; ++l) {
        std::vector<double> uv(G + 1);
        for (std::size_t i = 0; i <= G; ++i) uv[i] = sol.x[clp.u_col[l][i]];
        d.u.emplace_back(clp.grid, uv);

        std::vector<double> touch(M + 2, 0.0);
        touch[0] = 1.0;
        for (std::size_t j = 1; j <= M; ++j)
            touch[j] = sol.x[clp.beta[l][j - 1].col];
        touch[M + 1] = uv[G - 1] / hlast;
        d.touch.push_back(std::move(touch));

        std::vector<PLConvex> blocks;
        for (std::size_t j = 1; j <= M + 1; ++j) {
            std::vector<double> bv(G + 1, 0.0);
            for (std::size_t i = 0; i < clp.v_col[l][j - 1].size(); ++i)
                bv[i] = sol.x[clp.v_col[l][j - 1][i]];
            blocks.emplace_back(clp.grid, bv);
        }
        d.blocks.push_back(std::move(blocks));
    }
    return d;
}

namespace {

void addv(ValidationReport& r, std::string rule, int maturity, double loc, std::string msg) {
    r.violations.push_back({std::move(rule), maturity, loc, Severity::Fatal, std::move(msg)});
}

// |residual| <= tol checks for the nodal condition forms
void check_block_family(ValidationReport& r, const Grid& g, double spot,
                        const std::vector<double>& levels,
                        const std::vector<std::vector<double>>& touch,
                        const std::vector<std::vector<PLConvex>>& blocks,
                        const std::vector<PLConvex>& u, double tol) {
    const std::size_t G = g.size() - 1;
    const std::size_t M = levels.size() - 1;
    const std::size_t k = blocks.size();

    for (std::size_t l = 0; l < k; ++l) {
        const int ml = static_cast<int>(l) + 1;
        for (std::size_t j = 1; j <= M + 1; ++j) {
            const PLConvex& v = blocks[l][j - 1];
            const double Bj = levels[j - 1];
            const std::size_t P = g.index_of(Bj);
            const double bj = touch[l][j];
            const double bprev = touch[l][j - 1];
            const double Bprev = j >= 2 ? levels[j - 2] : spot;

            for (std::size_t i = 0; i <= G; ++i) {
                const double val = v.value_at_node(i);
                if (val < -tol || val > spot + tol)
                    addv(r, "COND_A", ml, g[i],
                         "block " + std::to_string(j) + " value " + fmt_g(val) +
                             " outside [0, S0]");
            }
            for (std::size_t i = 1; i <= G - 1; ++i) {
                const double lhs = (v.value_at_node(i + 1) - v.value_at_node(i)) * g.spacing(i - 1) -
                                   (v.value_at_node(i) - v.value_at_node(i - 1)) * g.spacing(i);
                if (lhs < -tol)
                    addv(r, "COND_A", ml, g[i],
                         "block " + std::to_string(j) + " not convex at " + fmt_g(g[i]));
            }
            if (std::fabs(v.value_at_node(0) - bprev * Bprev) > tol)
                addv(r, "COND_B", ml, Bj,
                     "block " + std::to_string(j) + " left value " + fmt_g(v.value_at_node(0)) +
                         " != " + fmt_g(bprev * Bprev));
            if (std::fabs(v.value_at_node(1) - v.value_at_node(0) + g.spacing(0) * bprev) > tol)
                addv(r, "COND_B", ml, Bj,
                     "block " + std::to_string(j) + " left slope != -" + fmt_g(bprev));
            for (std::size_t i = P; i <= G; ++i)
                if (std::fabs(v.value_at_node(i)) > tol)
                    addv(r, "COND_C", ml, g[i],
                         "block " + std::to_string(j) + " nonzero at/beyond its level");
            {
                const double resid = v.value_at_node(P - 1) - g.spacing(P - 1) * bj;
                if (std::fabs(resid) > tol)
                    addv(r, "COND_C", ml, Bj,
                         "block " + std::to_string(j) + " terminal slope != -" + fmt_g(bj));
            }
            for (std::size_t i = 0; i <= G; ++i) {
                const double w = std::max(Bprev - g[i], 0.0);
                const double prev_v = l > 0 ? blocks[l - 1][j - 1].value_at_node(i) : 0.0;
                const double prev_b = l > 0 ? touch[l - 1][j - 1] : 0.0;
                const double lhs = prev_v + (bprev - prev_b) * w - v.value_at_node(i);
                if (lhs > tol)
                    addv(r, "COND_D", ml, g[i],
                         "block " + std::to_string(j) + " violates calendar dominance at " +
                             fmt_g(g[i]));
            }
        }
        for (std::size_t i = 0; i <= G; ++i) {
            double s = 0.0;
            for (std::size_t j = 1; j <= M; ++j)
                s += blocks[l][j - 1].value_at_node(i) -
                     touch[l][j] * std::max(levels[j - 1] - g[i], 0.0);
            s += blocks[l][M].value_at_node(i);
            if (std::fabs(s - u[l].value_at_node(i)) > tol)
                addv(r, "COND_E", ml, g[i],
                     "block sum differs from the call curve at " + fmt_g(g[i]) + " by " +
                         fmt_g(s - u[l].value_at_node(i)));
        }
    }
}

} // namespace

ValidationReport check_conditions_multi(const Decomposition& d, double tol) {
    ValidationReport r;
    const std::size_t k = d.maturity_count();
    const std::size_t G = d.grid->size() - 1;

    for (std::size_t l = 0; l < k; ++l) {
        const int ml = static_cast<int>(l) + 1;
        ValidationReport cf = check_call_price_function(d.u[l], d.quotes.spot, tol);
        for (auto& v : cf.violations) {
            v.rule = "U_CALL_FN:" + v.rule;
            v.maturity = ml;
            r.violations.push_back(v);
        }
        if (l > 0) {
            for (std::size_t i = 0; i <= G; ++i)
                if (d.u[l].value_at_node(i) < d.u[l - 1].value_at_node(i) - tol)
                    addv(r, "U_ORDER", ml, (*d.grid)[i],
                         "call curves not ordered across maturities at " + fmt_g((*d.grid)[i]));
        }
        // quoted instruments must be matched by the stored functions
        for (const auto& c : d.quotes.maturities[l].calls) {
            const double got = d.u[l].value_at_node(d.grid->index_of(c.strike));
            if (std::fabs(got - c.price) > tol)
                addv(r, "U_PIN", ml, c.strike,
                     "call quote " + fmt_g(c.price) + " reproduced as " + fmt_g(got));
        }
        for (const auto& b : d.quotes.maturities[l].barriers) {
            bool found = false;
            for (std::size_t j = 1; j + 1 <= d.levels.size(); ++j)
                if (std::fabs(d.levels[j - 1] - b.level) <= kLevelTol) {
                    found = true;
                    if (std::fabs(d.touch[l][j] - b.price) > tol)
                        addv(r, "B_PIN", ml, b.level,
                             "barrier quote " + fmt_g(b.price) + " reproduced as " +
                                 fmt_g(d.touch[l][j]));
                }
            if (!found)
                addv(r, "B_PIN", ml, b.level, "quoted level missing from the decomposition");
        }
    }
    check_block_family(r, *d.grid, d.quotes.spot, d.levels, d.touch, d.blocks, d.u, tol);
    return r;
}

PLConvex assemble_frak_c(const Decomposition& d, std::size_t l, std::size_t j) {
    if (l < 1 || l > d.maturity_count()) throw std::out_of_range("assemble_frak_c: maturity");
    if (j < 1 || j > d.level_count()) throw std::out_of_range("assemble_frak_c: level");
    const std::size_t G = d.grid->size() - 1;
    std::vector<double> vals(G + 1, 0.0);
    for (std::size_t i = 0; i <= G; ++i) {
        double s = d.blocks[l - 1][j - 1].value_at_node(i);
        for (std::size_t jj = 1; jj < j; ++jj)
            s += d.blocks[l - 1][jj - 1].value_at_node(i) -
                 d.touch[l - 1][jj] * std::max(d.levels[jj - 1] - (*d.grid)[i], 0.0);
        vals[i] = s;
    }
    return PLConvex(d.grid, std::move(vals));
}

FrakFamily multi_to_single(const Decomposition& d, std::size_t l) {
    if (l < 1 || l > d.maturity_count()) throw std::out_of_range("multi_to_single: maturity");
    FrakFamily f;
    f.grid = d.grid;
    f.spot = d.quotes.spot;
    f.levels = d.levels;
    f.touch = d.touch[l - 1];
    for (std::size_t j = 1; j <= d.level_count(); ++j) f.fraks.push_back(assemble_frak_c(d, l, j));
    return f;
}

std::vector<PLConvex> single_to_multi(const FrakFamily& f) {
    if (f.fraks.size() != f.levels.size())
        throw std::invalid_argument("single_to_multi: fraks/levels length mismatch");
    if (f.touch.size() != f.levels.size() + 1)
        throw std::invalid_argument("single_to_multi: touch length mismatch");
    const std::size_t G = f.grid->size() - 1;
    std::vector<PLConvex> blocks;
    for (std::size_t j = 1; j <= f.levels.size(); ++j) {
        std::vector<double> vals(G + 1, 0.0);
        const double Bprev = j >= 2 ? f.levels[j - 2] : f.spot;
        const double bprev = f.touch[j - 1];
        for (std::size_t i = 0; i <= G; ++i) {
            const double frak_prev =
                j >= 2 ? f.fraks[j - 2].value_at_node(i)
                       : std::max(f.spot - (*f.grid)[i], 0.0); // frak^{B_0} = (S0 - x)^+
            vals[i] = f.fraks[j - 1].value_at_node(i) - frak_prev +
                      bprev * std::max(Bprev - (*f.grid)[i], 0.0);
        }
        blocks.emplace_back(f.grid, std::move(vals));
    }
    return blocks;
}

ValidationReport check_conditions_single(const FrakFamily& f, double tol) {
    ValidationReport r;
    const Grid& g = *f.grid;
    const std::size_t G = g.size() - 1;
    const std::size_t M = f.levels.size() - 1; // quoted levels; last frak is c_mu

    {
        ValidationReport cf = check_call_price_function(f.fraks.back(), f.spot, tol);
        for (auto& v : cf.violations) {
            v.rule = "CALL_FN:" + v.rule;
            r.violations.push_back(v);
        }
    }
    for (std::size_t j = 1; j <= M + 1; ++j) {
        const PLConvex& c = f.fraks[j - 1];
        for (std::size_t i = 0; i <= G; ++i) {
            const double val = c.value_at_node(i);
            if (val < -tol || val > f.spot + tol)
                addv(r, "COND_1", static_cast<int>(j), g[i], "value outside [0, S0]");
        }
        for (std::size_t i = 1; i <= G - 1; ++i) {
            const double lhs = (c.value_at_node(i + 1) - c.value_at_node(i)) * g.spacing(i - 1) -
                               (c.value_at_node(i) - c.value_at_node(i - 1)) * g.spacing(i);
            if (lhs < -tol)
                addv(r, "COND_1", static_cast<int>(j), g[i],
                     "frak function not convex at " + fmt_g(g[i]));
        }
        if (j >= 2) {
            for (std::size_t i = 0; i <= G; ++i)
                if (c.value_at_node(i) < f.fraks[j - 2].value_at_node(i) - tol)
                    addv(r, "COND_2", static_cast<int>(j), g[i],
                         "frak family not monotone at " + fmt_g(g[i]));
        }
        if (j <= M) {
            const std::size_t P = g.index_of(f.levels[j - 1]);
            if (std::fabs(c.value_at_node(0) - f.spot) > tol)
                addv(r, "COND_3", static_cast<int>(j), 0.0, "frak value at 0 != S0");
            if (std::fabs(c.value_at_node(1) - c.value_at_node(0) + g.spacing(0)) > tol)
                addv(r, "COND_3", static_cast<int>(j), 0.0, "frak slope at 0 != -1");
            for (std::size_t i = P; i <= G; ++i)
                if (std::fabs(c.value_at_node(i)) > tol)
                    addv(r, "COND_3", static_cast<int>(j), g[i],
                         "frak nonzero at/beyond its level");
            const double resid = c.value_at_node(P - 1) - g.spacing(P - 1) * f.touch[j];
            if (std::fabs(resid) > tol)
                addv(r, "COND_4", static_cast<int>(j), f.levels[j - 1],
                     "frak terminal slope != -" + fmt_g(f.touch[j]));
            // difference block convexity
            const PLConvex& cn = f.fraks[j];
            const double Bj = f.levels[j - 1];
            auto dval = [&](std::size_t i) {
                return cn.value_at_node(i) - c.value_at_node(i) +
                       f.touch[j] * std::max(Bj - g[i], 0.0);
            };
            for (std::size_t i = 1; i <= G - 1; ++i) {
                const double lhs = (dval(i + 1) - dval(i)) * g.spacing(i - 1) -
                                   (dval(i) - dval(i - 1)) * g.spacing(i);
                if (lhs < -tol)
                    addv(r, "COND_5", static_cast<int>(j), g[i],
                         "difference block not convex at " + fmt_g(g[i]));
            }
        }
    }
    return r;
}

CalibrationOutcome calibrate(const MarketQuotes& q, const CalibrationConfig& cfg) {
    auto grid = Grid::build(q, cfg.refine);
    CalibrationLp clp = build_lp(q, grid, {}, cfg.objective, true);
    LpSolution sol = solve(clp.problem, cfg.lp);

    if (sol.status == LpStatus::Infeasible) {
        ArbitrageCertificate cert = extract_certificate(clp, sol.farkas, cfg.lp);
        if (!cert.confirmed)
            throw SolverStalled("infeasible LP but certificate confirmation failed");
        return cert;
    }
    if (sol.status == LpStatus::Unbounded)
        throw SolverStalled("calibration LP unexpectedly unbounded");

    std::string objname = "feasibility";
    if (std::holds_alternative<Regularize>(cfg.objective)) objname = "regularize";
    else if (std::holds_alternative<LevelBound>(cfg.objective)) objname = "level_bound";
    else if (std::holds_alternative<PayoffBound>(cfg.objective)) objname = "payoff_bound";

    Decomposition d = extract_decomposition(clp, sol, q, objname);
    d.meta.tol_feas = cfg.lp.tol_feas;
    ValidationReport rc = check_conditions_multi(d, 10.0 * cfg.lp.tol_feas);
    if (!rc.violations.empty()) {
        std::ostringstream os;
        os << "post-hoc condition check failed: " << rc.violations.size()
           << " violation(s), first: " << rc.violations.front().rule << " "
           << rc.violations.front().message;
        throw SolverStalled(os.str());
    }
    return d;
}

} // namespace maxcal
