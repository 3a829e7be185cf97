#include "maxcal/pricing.hpp"

#include "maxcal/joint_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maxcal {

namespace {

constexpr double kLevelTol = 1e-9;

double frak_at(const Decomposition& d, std::size_t l, std::size_t j, double K) {
    if (K >= d.grid->upper()) return 0.0;
    return assemble_frak_c(d, l, j)(K);
}

std::variant<BoundResult, ArbitrageCertificate>
solve_bound(const MarketQuotes& q, const CalibrationConfig& cfg, const CalibrationLp& clp,
            Side side, const std::string& objective_name, int value_col) {
    LpSolution sol = solve(clp.problem, cfg.lp);
    if (sol.status == LpStatus::Infeasible) {
        ArbitrageCertificate cert = extract_certificate(clp, sol.farkas, cfg.lp);
        if (!cert.confirmed)
            throw SolverStalled("infeasible LP but certificate confirmation failed");
        return cert;
    }
    if (sol.status == LpStatus::Unbounded)
        throw SolverStalled("bound LP unexpectedly unbounded");

    BoundResult out;
    out.side = side;
    out.value = value_col >= 0 ? sol.x[value_col]
                               : (side == Side::Max ? -sol.objective : sol.objective);

    out.achieved_by = extract_decomposition(clp, sol, q, objective_name);
    out.achieved_by.meta.tol_feas = cfg.lp.tol_feas;
    ValidationReport rc = check_conditions_multi(out.achieved_by, 10.0 * cfg.lp.tol_feas);
    if (!rc.violations.empty())
        throw SolverStalled("bound optimizer failed the post-hoc condition check: " +
                            rc.violations.front().rule + " " + rc.violations.front().message);

    const double dual_sign = side == Side::Max ? -1.0 : 1.0;
    for (const auto& pin : clp.pins) {
        BoundResult::DualPrice dp;
        dp.kind = pin.kind;
        dp.maturity = pin.maturity;
        dp.strike_or_level = pin.strike_or_level;
        dp.dual = dual_sign * sol.duals[pin.row];
        out.dual_prices.push_back(dp);
    }
    return out;
}

} // namespace

double up_and_out_put(const Decomposition& d, std::size_t l, std::size_t j, double K) {
    if (l < 1 || l > d.maturity_count()) throw std::out_of_range("up_and_out_put: maturity");
    if (j < 1 || j > d.level_count()) throw std::out_of_range("up_and_out_put: level index");
    if (K < 0.0) throw std::invalid_argument("up_and_out_put: negative strike");
    const double Bj = d.levels[j - 1];
    const double bj = d.touch[l - 1][j];
    const double protective = K - d.quotes.spot + frak_at(d, l, j, K);
    return protective - std::max(K - Bj, 0.0) * bj;
}

double up_and_out_call(const Decomposition& d, std::size_t l, std::size_t j, double K) {
    if (l < 1 || l > d.maturity_count()) throw std::out_of_range("up_and_out_call: maturity");
    if (j < 1 || j > d.level_count()) throw std::out_of_range("up_and_out_call: level index");
    if (K < 0.0) throw std::invalid_argument("up_and_out_call: negative strike");
    const double Bj = d.levels[j - 1];
    const double bj = d.touch[l - 1][j];
    return frak_at(d, l, j, K) - std::max(Bj - K, 0.0) * bj;
}

double payoff_value(const Decomposition& d, const PayoffSpec& payoff) {
    if (payoff.maturity < 1 || payoff.maturity > d.maturity_count())
        throw std::out_of_range("payoff_value: maturity");
    const JointPmf pmf = band_pmf(d, payoff.maturity);
    const std::size_t G = d.grid->size() - 1;
    double total = 0.0;
    for (const auto& leg : payoff.legs) {
        if (leg.band_lo < 1 || leg.band_hi > pmf.band_count() || leg.band_lo > leg.band_hi)
            throw std::invalid_argument("payoff_value: band range invalid");
        if (leg.node_values.size() != G + 1)
            throw std::invalid_argument("payoff_value: node values must match the grid");
        for (std::size_t j = leg.band_lo; j <= leg.band_hi; ++j)
            for (std::size_t i = 0; i <= G; ++i)
                total += leg.node_values[i] * pmf.bands[j - 1].weights()[i];
    }
    return total;
}

std::variant<BoundResult, ArbitrageCertificate>
robust_barrier_bounds(const MarketQuotes& q, const CalibrationConfig& cfg, std::size_t l,
                      double B_star, Side side) {
    if (l < 1 || l > q.maturities.size())
        throw std::out_of_range("robust_barrier_bounds: maturity");
    if (B_star <= q.spot + kLevelTol || B_star > q.upper_bound + kLevelTol)
        throw std::invalid_argument("robust_barrier_bounds: level must lie in (S0, N]");
    for (const auto& b : q.maturities[l - 1].barriers)
        if (std::fabs(b.level - B_star) <= kLevelTol)
            throw std::invalid_argument("robust_barrier_bounds: level already quoted");

    auto grid = Grid::build(q, cfg.refine, {B_star});
    LevelBound lb{l, B_star, side};
    CalibrationLp clp = build_lp(q, grid, {B_star}, lb, true);

    int value_col = -1;
    for (std::size_t j = 1; j + 1 <= clp.levels.size(); ++j)
        if (std::fabs(clp.levels[j - 1] - B_star) <= kLevelTol)
            value_col = clp.beta[l - 1][j - 1].col;
    if (value_col < 0) throw std::logic_error("robust_barrier_bounds: level column missing");

    return solve_bound(q, cfg, clp, side, side == Side::Max ? "level_bound_max" : "level_bound_min",
                       value_col);
}

std::variant<BoundResult, ArbitrageCertificate>
price_bound(const MarketQuotes& q, const CalibrationConfig& cfg, const PayoffSpec& payoff,
            Side side) {
    auto grid = Grid::build(q, cfg.refine);
    PayoffBound pb{payoff, side};
    CalibrationLp clp = build_lp(q, grid, {}, pb, true);
    return solve_bound(q, cfg, clp, side,
                       side == Side::Max ? "payoff_bound_max" : "payoff_bound_min", -1);
}

} // namespace maxcal
