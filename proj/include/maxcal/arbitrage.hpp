#pragma once

#include "maxcal/lp_core.hpp"
#include "maxcal/market_data.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace maxcal {

struct CalibrationLp; // decomposition.hpp
struct CalibrationConfig;

struct LambdaEntry {
    enum class Kind { Call, Digital };
    Kind kind = Kind::Call;
    std::size_t maturity = 1; // 1-based
    double strike_or_level = 0.0;
    double weight = 0.0; // positive = short the instrument at market
};

// Static portfolio whose market price strictly exceeds the best value any
// model supported on the working grid can give it. 'gap' is that excess after
// normalizing the weights to max |lambda| = 1.
struct ArbitrageCertificate {
    std::vector<LambdaEntry> lambdas;
    double market_price = 0.0;
    double superrep_value = 0.0;
    double gap = 0.0;
    bool grid_certificate = true; // semantics are relative to grid-supported models
    bool confirmed = false;
};

// Reads the quote-pin multipliers out of a Farkas vector, normalizes them,
// and prices the resulting portfolio against the pin-free calibration
// polytope to establish the gap. Throws std::runtime_error when the Farkas
// vector fails verification or carries no pin-row weight.
ArbitrageCertificate extract_certificate(const CalibrationLp& clp,
                                         const std::vector<double>& farkas,
                                         const LpOptions& opt = {});

struct VerifyResult {
    double superrep_value = 0.0;
    bool confirmed = false;
};

// Independent confirmation: rebuilds the calibration polytope for the quotes
// (without pin rows), maximizes the certificate portfolio's model value, and
// checks market_price - optimum against the recorded gap.
VerifyResult verify_arbitrage(const MarketQuotes& q, const CalibrationConfig& cfg,
                              const ArbitrageCertificate& cert);

} // namespace maxcal
