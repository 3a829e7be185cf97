#pragma once

#include "maxcal/decomposition.hpp"

#include <cstddef>
#include <variant>
#include <vector>

namespace maxcal {

// E[(K - S_T)^+ 1{M_T < B_j}] = p_l^{B_j}(K) - (K - B_j)^+ b_l(B_j) with
// p_l^{B_j}(K) = K - S0 + frak_l^{B_j}(K). K beyond N evaluates the frak
// function as zero.
double up_and_out_put(const Decomposition& d, std::size_t l, std::size_t j, double K);

// E[(S_T - K)^+ 1{M_T < B_j}] = frak_l^{B_j}(K) - (B_j - K)^+ b_l(B_j)
double up_and_out_call(const Decomposition& d, std::size_t l, std::size_t j, double K);

// expectation of a PayoffSpec under the band measures of a decomposition
double payoff_value(const Decomposition& d, const PayoffSpec& payoff);

struct BoundResult {
    Side side = Side::Max;
    double value = 0.0;
    Decomposition achieved_by; // optimizer vertex, re-checked feasible
    struct DualPrice {
        PinInfo::Kind kind = PinInfo::Kind::Call;
        std::size_t maturity = 1;
        double strike_or_level = 0.0;
        double dual = 0.0; // sensitivity of the bound to this quote
    };
    std::vector<DualPrice> dual_prices;
};

// Extremal one-touch price at an unquoted level B_star over all grid models
// consistent with the quotes. B_star must satisfy S0 < B_star <= N and must
// not be quoted at maturity l. Infeasible quotes yield the certificate.
std::variant<BoundResult, ArbitrageCertificate>
robust_barrier_bounds(const MarketQuotes& q, const CalibrationConfig& cfg, std::size_t l,
                      double B_star, Side side);

// Extremal price of a band payoff. The payoff's node_values must be sampled
// on Grid::build(q, cfg.refine); band indices refer to the quoted levels
// plus the terminal band M+1.
std::variant<BoundResult, ArbitrageCertificate>
price_bound(const MarketQuotes& q, const CalibrationConfig& cfg, const PayoffSpec& payoff,
            Side side);

} // namespace maxcal
