#pragma once

#include "maxcal/decomposition.hpp"
#include "maxcal/lp_core.hpp"

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace maxcal::testutil {

// A birth-death chain martingale on a small price ladder, absorbed at both
// ends, with the (price, running max) pair tracked exactly. Because every
// move is to a neighbouring ladder node, the chain never overshoots a level,
// so its running max matches the running max of the continuous embedding and
// the implied quotes are genuinely consistent with a continuous model.
struct ChainModel {
    double spot = 1.0;
    double upper = 0.0;           // support bound N >= ladder.back()
    std::vector<double> ladder;   // ascending, all > 0
    std::size_t k = 1;
    // joint[l]: (price index, max index) -> probability at maturity l+1
    std::vector<std::map<std::pair<std::size_t, std::size_t>, double>> joint;
    MarketQuotes quotes;

    double call_price(std::size_t l, double K) const;
    double touch_prob(std::size_t l, double B) const;  // P(M >= B)
    double max_support(std::size_t l) const;           // top of the price support
    double mass_at(std::size_t l, double s) const;
    // E[(K - S)^+ 1{M < B}] and E[(S - K)^+ 1{M < B}]
    double uo_put(std::size_t l, double B, double K) const;
    double uo_call(std::size_t l, double B, double K) const;
};

ChainModel random_chain_model(std::uint64_t seed);

// The exact decomposition of the chain law on Grid::build(quotes, refine):
// blocks evaluated from the joint law directly, no LP involved.
Decomposition chain_decomposition(const ChainModel& cm, int refine = 0);

// Small random box-bounded equality-form LP with integer data (for solver
// cross-checks against vertex enumeration). All variable bounds are finite.
LpProblem random_lp(std::uint64_t seed);

} // namespace maxcal::testutil
