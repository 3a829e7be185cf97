#pragma once

#include "maxcal/arbitrage.hpp"
#include "maxcal/convex_fn.hpp"
#include "maxcal/lp_core.hpp"
#include "maxcal/market_data.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace maxcal {

// ---- objective selection for the calibration LP ----

enum class Side { Max, Min };

struct Feasibility {};

// Minimizes the total variation of the segment slopes of every function in
// the decomposition (a linear proxy for penalizing atoms).
struct Regularize {};

// Optimize the one-touch price of 'level' at 'maturity' (1-based). The level
// must be present in the LP's level list as a free (unquoted) level.
struct LevelBound {
    std::size_t maturity = 1;
    double level = 0.0;
    Side side = Side::Max;
};

// Payoff legs select a band range [band_lo, band_hi] (1-based; band j means
// M in [B_{j-1}, B_j), band m+1 means M in [B_m, N]) and pay a piecewise
// linear function of S given by its grid node values.
struct PayoffLeg {
    std::size_t band_lo = 1;
    std::size_t band_hi = 1;
    std::vector<double> node_values;
};

struct PayoffSpec {
    std::size_t maturity = 1;
    std::vector<PayoffLeg> legs;
};

struct PayoffBound {
    PayoffSpec payoff;
    Side side = Side::Max;
};

using ObjectiveSpec = std::variant<Feasibility, Regularize, LevelBound, PayoffBound>;

struct CalibrationConfig {
    int refine = 2;
    ObjectiveSpec objective = Feasibility{};
    LpOptions lp;
};

// ---- the LP and its index maps ----

struct PinInfo {
    enum class Kind { Call, Digital };
    Kind kind = Kind::Call;
    std::size_t maturity = 1; // 1-based
    double strike_or_level = 0.0;
    double quote = 0.0;
    std::size_t row = 0; // index into problem.rows
};

// Reference to the variable playing b_l(B_j): either a pinned quote variable
// (unbounded, tied to the quote by a pin row) or a free beta in [0, 1].
struct BetaRef {
    int col = -1;
    bool pinned = false;
    double quote = 0.0; // meaningful when pinned
};

struct CalibrationLp {
    LpProblem problem;
    std::shared_ptr<const Grid> grid;
    double spot = 0.0;
    std::size_t k = 0;           // maturities
    std::vector<double> levels;  // B_1..B_{M+1}, last entry always N
    // u_col[l][i]: variable of c_mu_l at node i. v_col[l][j-1][i]: variable of
    // c_l^{B_j} at node i, defined for i < idx(B_j) only (zero beyond).
    std::vector<std::vector<int>> u_col;
    std::vector<std::vector<std::vector<int>>> v_col;
    std::vector<std::vector<BetaRef>> beta;   // [l][j-1], j = 1..M (quoted/free levels)
    std::vector<std::vector<int>> qv_col;     // [l][ci]: call quote variable per quoted strike
    std::vector<PinInfo> pins;
};

// ---- calibration results ----

struct DecompositionMeta {
    std::string objective = "feasibility";
    long iterations = 0;
    double tol_feas = 0.0;
};

struct Decomposition {
    std::shared_ptr<const Grid> grid;
    MarketQuotes quotes;
    std::vector<double> levels; // B_1..B_{M+1}
    // touch[l][j]: b_l(B_j) for j = 0..M+1 with touch[l][0] = 1 (B_0 = S0)
    // and touch[l][M+1] the derived right-end slope of u_l.
    std::vector<std::vector<double>> touch;
    std::vector<PLConvex> u;                       // c_mu_l per maturity
    std::vector<std::vector<PLConvex>> blocks;     // [l][j-1], full-grid values
    DecompositionMeta meta;

    std::size_t maturity_count() const { return u.size(); }
    std::size_t level_count() const { return levels.size(); } // = M+1
};

// ---- operations ----

// Assembles the LP encoding of the characterization conditions over PL
// functions on 'grid'. 'extra_levels' inserts unquoted barrier levels whose
// one-touch prices become free variables (used by the bound objectives);
// every extra level must be a grid node in (S0, N].
CalibrationLp build_lp(const MarketQuotes& q, std::shared_ptr<const Grid> grid,
                       const std::vector<double>& extra_levels, const ObjectiveSpec& objective,
                       bool include_pins = true);

using CalibrationOutcome = std::variant<Decomposition, ArbitrageCertificate>;

// Full pipeline: validate-for-structure happens upstream; here quotes are
// assumed statically valid. Solves the LP; on feasibility re-checks every
// condition independently and returns the Decomposition, otherwise extracts
// and confirms an ArbitrageCertificate. Throws SolverStalled when the kernel
// cannot certify either way.
CalibrationOutcome calibrate(const MarketQuotes& q, const CalibrationConfig& cfg = {});

// Builds a Decomposition from a solved calibration LP vertex.
Decomposition extract_decomposition(const CalibrationLp& clp, const LpSolution& sol,
                                    const MarketQuotes& q, const std::string& objective_name);

// Independent nodal checker for the multi-maturity conditions; rule ids
// COND_A..COND_E plus U_CALL_FN/U_ORDER for the call-curve requirements.
ValidationReport check_conditions_multi(const Decomposition& d, double tol);

// Single-maturity view: the family frak_c^{B_1} <= ... <= frak_c^{B_{m+1}}.
struct FrakFamily {
    std::shared_ptr<const Grid> grid;
    double spot = 0.0;
    std::vector<double> levels;  // B_1..B_{M+1}
    std::vector<double> touch;   // b(B_j), j = 0..M+1
    std::vector<PLConvex> fraks; // j = 1..M+1, last equals c_mu
};

// Independent nodal checker for the single-maturity conditions; rule ids
// COND_1..COND_5 plus CALL_FN for the call-price-function requirement.
ValidationReport check_conditions_single(const FrakFamily& f, double tol);

// frak_c_l^{B_j} = sum_{i<j} (c_l^{B_i} - b_l(B_i)(B_i - x)^+) + c_l^{B_j};
// j is 1-based up to M+1.
PLConvex assemble_frak_c(const Decomposition& d, std::size_t l, std::size_t j);

// Mutually inverse maps between the two characterizations (maturity fixed).
FrakFamily multi_to_single(const Decomposition& d, std::size_t l);
std::vector<PLConvex> single_to_multi(const FrakFamily& f);

} // namespace maxcal
