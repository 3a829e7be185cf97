#include "maxcal/arbitrage.hpp"

#include "maxcal/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace maxcal {

namespace {

constexpr double kLambdaDrop = 1e-10;
constexpr double kMatchTol = 1e-9;

// superreplication LP: structural rows only, maximize the portfolio value
double superreplicate(LpProblem vp, std::size_t nstruct,
                      const std::vector<std::pair<int, double>>& portfolio,
                      const LpOptions& opt) {
    vp.rows.resize(nstruct);
    std::fill(vp.obj.begin(), vp.obj.end(), 0.0);
    for (const auto& [col, lam] : portfolio) vp.obj[col] -= lam;
    LpSolution sol = solve(vp, opt);
    if (sol.status != LpStatus::Optimal)
        throw SolverStalled("superreplication LP did not reach an optimum");
    return -sol.objective;
}

} // namespace

ArbitrageCertificate extract_certificate(const CalibrationLp& clp,
                                         const std::vector<double>& farkas,
                                         const LpOptions& opt) {
    if (clp.pins.empty())
        throw std::invalid_argument("extract_certificate: LP has no quote pins");
    if (farkas.size() != clp.problem.num_rows())
        throw std::invalid_argument("extract_certificate: farkas vector size mismatch");

    const std::size_t nstruct = clp.pins.front().row;
    if (clp.problem.num_rows() - nstruct != clp.pins.size())
        throw std::logic_error("extract_certificate: pin rows are not trailing");

    double amax = 0.0;
    for (const auto& pin : clp.pins) amax = std::max(amax, std::fabs(farkas[pin.row]));
    if (amax < kLambdaDrop)
        throw std::runtime_error("extract_certificate: certificate does not touch the quotes");

    ArbitrageCertificate cert;
    std::vector<std::pair<int, double>> portfolio;
    for (const auto& pin : clp.pins) {
        const double lam = farkas[pin.row] / amax;
        if (std::fabs(lam) < kLambdaDrop) continue;
        LambdaEntry e;
        e.kind = pin.kind == PinInfo::Kind::Call ? LambdaEntry::Kind::Call
                                                 : LambdaEntry::Kind::Digital;
        e.maturity = pin.maturity;
        e.strike_or_level = pin.strike_or_level;
        e.weight = lam;
        cert.lambdas.push_back(e);
        cert.market_price += lam * pin.quote;
        portfolio.emplace_back(clp.problem.rows[pin.row].coeffs.front().first, lam);
    }

    cert.superrep_value = superreplicate(clp.problem, nstruct, portfolio, opt);
    cert.gap = cert.market_price - cert.superrep_value;
    cert.grid_certificate = true;
    cert.confirmed = cert.gap > opt.tol_gap;
    return cert;
}

VerifyResult verify_arbitrage(const MarketQuotes& q, const CalibrationConfig& cfg,
                              const ArbitrageCertificate& cert) {
    if (cert.lambdas.empty())
        throw std::invalid_argument("verify_arbitrage: certificate has no positions");

    auto grid = Grid::build(q, cfg.refine);
    CalibrationLp clp = build_lp(q, grid, {}, Feasibility{}, false);

    double market = 0.0;
    std::vector<std::pair<int, double>> portfolio;
    for (const auto& e : cert.lambdas) {
        if (e.maturity < 1 || e.maturity > q.maturities.size())
            throw std::invalid_argument("verify_arbitrage: maturity out of range");
        const auto& mat = q.maturities[e.maturity - 1];
        int col = -1;
        double quote = 0.0;
        if (e.kind == LambdaEntry::Kind::Call) {
            for (std::size_t ci = 0; ci < mat.calls.size(); ++ci)
                if (std::fabs(mat.calls[ci].strike - e.strike_or_level) <= kMatchTol) {
                    col = clp.qv_col[e.maturity - 1][ci];
                    quote = mat.calls[ci].price;
                }
        } else {
            for (std::size_t j = 1; j + 1 <= clp.levels.size(); ++j)
                if (std::fabs(clp.levels[j - 1] - e.strike_or_level) <= kMatchTol &&
                    clp.beta[e.maturity - 1][j - 1].pinned) {
                    col = clp.beta[e.maturity - 1][j - 1].col;
                    quote = clp.beta[e.maturity - 1][j - 1].quote;
                }
        }
        if (col < 0)
            throw std::invalid_argument("verify_arbitrage: certificate references an instrument "
                                        "absent from the quotes");
        market += e.weight * quote;
        portfolio.emplace_back(col, e.weight);
    }

    VerifyResult out;
    out.superrep_value =
        superreplicate(clp.problem, clp.problem.num_rows(), portfolio, cfg.lp);
    const double gap = market - out.superrep_value;
    out.confirmed = gap > cfg.lp.tol_gap && gap >= cert.gap - cfg.lp.tol_gap;
    return out;
}

} // namespace maxcal
