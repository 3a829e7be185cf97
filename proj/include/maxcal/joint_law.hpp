#pragma once

#include "maxcal/convex_fn.hpp"
#include "maxcal/decomposition.hpp"

#include <iosfwd>
#include <vector>

namespace maxcal {

// Joint law of (S_T, M_T) at one maturity, resolved by barrier band.
// Band j covers the event M in [B_{j-1}, B_j) for j = 1..M, and band M+1
// covers M in [B_M, N]. Band sub-measures tile the terminal law.
struct JointPmf {
    std::shared_ptr<const Grid> grid;
    std::size_t maturity = 1;           // 1-based
    double spot = 0.0;                  // B_0
    std::vector<double> levels;         // B_1..B_{M+1}, last entry N
    std::vector<double> touch;          // b(B_0)=1 .. b(B_{M+1})
    std::vector<DiscreteMeasure> bands; // band j at index j-1

    std::size_t band_count() const { return bands.size(); }
    // terminal marginal: sum of all band measures
    DiscreteMeasure marginal() const;
};

// Band sub-measures as second differences of g_{l,j} = c_l^{B_j} - b_j (B_j - x)^+
// (band M+1 uses the block itself). A negative atom beyond tol means the
// decomposition is internally inconsistent and raises std::runtime_error.
JointPmf band_pmf(const Decomposition& d, std::size_t l, double tol = 1e-7);

// P(S_T > x, M_T < B_j) = -frak'(x+) - b(B_j), clamped to [0, 1 - b(B_j)].
// Requires 0 <= x < B_j; j in 1..M+1.
double joint_tail_below(const Decomposition& d, std::size_t l, std::size_t j, double x);

// F(x, B) = P(S_T > x, M_T >= B) for S0 <= B <= B_M (linear blend in B
// between quoted levels, with B_0 = S0 as the left anchor) and 0 <= x <= N.
double joint_tail_above(const Decomposition& d, std::size_t l, double x, double B);

struct RogersEntry {
    double level = 0.0;
    double d_value = 0.0; // E[S | M >= level]
    bool skipped = false;
    std::string note;
    bool pass_floor = false; // d(m) >= m
};

struct RogersReport {
    std::size_t maturity = 1;
    double tol = 1e-8;
    std::vector<RogersEntry> entries; // sorted by level
    bool pass_monotone = true;

    bool pass() const {
        if (!pass_monotone) return false;
        for (const auto& e : entries)
            if (!e.skipped && !e.pass_floor) return false;
        return true;
    }
};

// Evaluates d(m) = E[S 1{M >= m}] / P(M >= m) at S0, the quoted levels and
// any extra levels (interpolated linearly between quoted anchors). Levels
// above the last quoted one, or with no mass above, are skipped with a note.
RogersReport rogers_check(const JointPmf& p, const std::vector<double>& extra_levels,
                          double tol = 1e-8);

// sigma^2(x_i, band j) = 2 lambda [sum_y (x_i - y)^+ p(y, j)] h_i / p(x_i, j)
// with h_i the midpoint cell width. Nodes with no mass hold NaN.
// Returned as [band j - 1][node i].
std::vector<std::vector<double>> state_vol(const JointPmf& p, double lambda);

// CSV: "maturity,x,band_lo,band_hi,mass", one row per atom (|w| > 1e-12)
void write_pmf_csv(std::ostream& os, const JointPmf& p);
// CSV: "maturity,x,level,tail_prob" for levels B_0 = S0 .. B_M at all nodes
void write_tails_csv(std::ostream& os, const Decomposition& d, std::size_t l);

} // namespace maxcal
