#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace maxcal {

// Equality-form LP with box-constrained variables:
//   minimize c'x  subject to  A x = b,  lo <= x <= hi
// Inequalities are expressed by the caller through explicit slack variables,
// which keeps the row multipliers unambiguous. Bounds may be +-infinity.
struct LpRow {
    std::string tag;
    double rhs = 0.0;
    std::vector<std::pair<int, double>> coeffs; // (column, value), column unique per row
};

struct LpProblem {
    std::vector<double> obj;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<std::string> var_tags;
    std::vector<LpRow> rows;

    int add_var(const std::string& tag, double lo_bound, double hi_bound, double cost = 0.0);
    void add_row(const std::string& tag, double rhs,
                 std::vector<std::pair<int, double>> coeffs);
    std::size_t num_vars() const { return obj.size(); }
    std::size_t num_rows() const { return rows.size(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    std::vector<double> x;             // primal values (Optimal)
    double objective = 0.0;            // c'x (Optimal)
    std::vector<double> duals;         // row multipliers y with rc = c - A'y (Optimal)
    std::vector<double> reduced_costs; // c - A'y (Optimal)
    std::vector<double> farkas;        // infeasibility multipliers (Infeasible)
    std::vector<double> ray;           // improving feasible direction (Unbounded)
    long iterations = 0;
};

struct LpOptions {
    double tol_feas = 1e-8;
    double tol_pivot = 1e-10;
    double tol_gap = 1e-7;
    int iter_cap_factor = 50; // cap = factor * (rows + columns)
};

// Raised when the solver cannot certify any of the three statuses within its
// iteration budget or when a produced certificate fails self-verification.
// Callers must treat this as "no answer", never as infeasibility.
class SolverStalled : public std::runtime_error {
  public:
    explicit SolverStalled(const std::string& msg) : std::runtime_error(msg) {}
};

// Two-phase primal simplex on the bounded-variable form, Bland's rule, dense
// tableau. Infeasible outcomes carry a Farkas vector y that is re-verified
// via verify_certificate before being returned.
LpSolution solve(const LpProblem& p, const LpOptions& opt = {});

// Checks y'b - sup{ (y'A)x : lo <= x <= hi } > tol, i.e. y prices a portfolio
// of rows whose guaranteed value exceeds what any feasible x can deliver.
// An infinite supremum returns false.
bool verify_certificate(const LpProblem& p, const std::vector<double>& y, double tol = 1e-7);

// Brute-force enumeration of the basic feasible points of {Ax=b, lo<=x<=hi}
// for small problems (reference for tests). Vertices are deduplicated after
// rounding to 1e-9 and sorted lexicographically.
std::vector<std::vector<double>> enumerate_vertices(const LpProblem& p, int max_vars = 10);

// Human-readable dump for debugging.
std::string dump_problem(const LpProblem& p);

} // namespace maxcal
