#pragma once

#include "maxcal/decomposition.hpp"
#include "maxcal/lp_core.hpp"
#include "maxcal/market_data.hpp"

#include <memory>
#include <vector>

namespace maxcal::testutil {

// Reference LP over the joint pmf itself: variables are the probabilities
// p_l(x_i, band j) of ending at price x_i with the running max in band j.
// Constraints are phrased directly on the pmf (mass, martingale stopping
// identities at each level, band supports, cross-maturity dominance rows and
// the quote pins), so the formulation shares nothing with the block LP of
// the library apart from the simplex kernel, which is itself cross-checked
// against vertex enumeration elsewhere.
struct OracleLp {
    LpProblem problem;
    std::shared_ptr<const Grid> grid;
    std::vector<double> levels; // B_1..B_{M+1}, last entry = N
    // p[l][j-1][i]: column of band-j mass at node i; -1 where fixed to zero
    std::vector<std::vector<std::vector<int>>> p;
};

OracleLp build_pmf_lp(const MarketQuotes& q, std::shared_ptr<const Grid> grid,
                      const std::vector<double>& extra_levels);

struct OracleBound {
    bool feasible = false;
    double value = 0.0;
};

bool oracle_feasible(const MarketQuotes& q, std::shared_ptr<const Grid> grid);

// Best/worst one-touch price of 'level' at maturity l over all consistent
// pmfs; 'level' must appear in quoted-or-extra levels.
OracleBound oracle_touch_bound(const MarketQuotes& q, std::shared_ptr<const Grid> grid,
                               const std::vector<double>& extra_levels, std::size_t l,
                               double level, Side side);

// Best/worst expectation of a band-range payoff (same PayoffSpec the library
// consumes; node_values must be sampled on 'grid').
OracleBound oracle_payoff_bound(const MarketQuotes& q, std::shared_ptr<const Grid> grid,
                                const PayoffSpec& payoff, Side side);

} // namespace maxcal::testutil
