#include "maxcal/lp_core.hpp"

#include "maxcal/json_writer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace maxcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEnterTol = 1e-9; // reduced-cost threshold for entering columns

bool is_bad(double v) { return std::isnan(v); }

// Dense LU with partial pivoting for the final basis refresh. Returns false
// on a (numerically) singular matrix.
class Lu {
  public:
    bool factor(std::vector<double> a, std::size_t n) {
        n_ = n;
        a_ = std::move(a);
        perm_.resize(n);
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            double best = std::fabs(a_[perm_[k] * n + k]);
            for (std::size_t i = k + 1; i < n; ++i) {
                double v = std::fabs(a_[perm_[i] * n + k]);
                if (v > best) { best = v; p = i; }
            }
            if (best < 1e-13) return false;
            std::swap(perm_[k], perm_[p]);
            const double piv = a_[perm_[k] * n + k];
            for (std::size_t i = k + 1; i < n; ++i) {
                double f = a_[perm_[i] * n + k] / piv;
                a_[perm_[i] * n + k] = f;
                for (std::size_t j = k + 1; j < n; ++j)
                    a_[perm_[i] * n + j] -= f * a_[perm_[k] * n + j];
            }
        }
        return true;
    }

    // solve A x = b
    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> y(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) s -= a_[perm_[i] * n_ + j] * y[j];
            y[i] = s;
        }
        for (std::size_t i = n_; i-- > 0;) {
            double s = y[i];
            for (std::size_t j = i + 1; j < n_; ++j) s -= a_[perm_[i] * n_ + j] * y[j];
            y[i] = s / a_[perm_[i] * n_ + i];
        }
        return y;
    }

    // solve A' x = b via two triangular sweeps on the factored form
    std::vector<double> solve_transposed(const std::vector<double>& b) const {
        // A = P' L U with rows permuted; A' y = b  <=>  U' L' P y = b
        std::vector<double> z(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = b[i];
            for (std::size_t j = 0; j < i; ++j) s -= a_[perm_[j] * n_ + i] * z[j];
            z[i] = s / a_[perm_[i] * n_ + i];
        }
        std::vector<double> w(n_);
        for (std::size_t i = n_; i-- > 0;) {
            double s = z[i];
            for (std::size_t j = i + 1; j < n_; ++j) s -= a_[perm_[j] * n_ + i] * w[j];
            w[i] = s;
        }
        std::vector<double> y(n_);
        for (std::size_t i = 0; i < n_; ++i) y[perm_[i]] = w[i];
        return y;
    }

  private:
    std::size_t n_ = 0;
    std::vector<double> a_;
    std::vector<std::size_t> perm_;
};

enum : std::uint8_t { NB_LO = 0, NB_UP = 1, BASIC = 2 };

struct Simplex {
    const LpProblem& p;
    const LpOptions& opt;

    std::size_t m;     // rows
    std::size_t ns;    // structural internal columns
    std::size_t ntot;  // ns + m (artificials appended)

    // internal column meta
    std::vector<int> ext;        // external var index per structural column
    std::vector<int> mode;       // +1 shifted, -1 negated, +2 split plus, -2 split minus
    std::vector<double> shift;   // per external var
    std::vector<double> ucap;    // internal upper bound per column (lo is 0)
    std::vector<double> cost2;   // phase-2 cost per column
    std::vector<double> sigma;   // artificial orientation per row
    std::vector<double> bprime;  // shifted rhs
    std::vector<double> rowsd;   // dense internal rows, m x ntot

    std::vector<double> T;       // tableau B^-1 [A | I_sigma], m x ntot
    std::vector<double> d1, d2;  // reduced-cost rows
    std::vector<double> xB;
    std::vector<int> basis;      // internal column per row
    std::vector<std::uint8_t> stat;
    long iterations = 0;
    long iter_cap = 0;
    long since_rebuild = 0;      // pivots since the last exact refactorization
    long rebuild_every = 200;

    Simplex(const LpProblem& prob, const LpOptions& o) : p(prob), opt(o) {}

    double& Tat(std::size_t i, std::size_t j) { return T[i * ntot + j]; }
    double Tat(std::size_t i, std::size_t j) const { return T[i * ntot + j]; }

    void validate_input() const {
        const std::size_t n = p.num_vars();
        for (std::size_t j = 0; j < n; ++j) {
            if (is_bad(p.lo[j]) || is_bad(p.hi[j]) || is_bad(p.obj[j]))
                throw std::invalid_argument("LP data contains NaN");
            if (p.lo[j] > p.hi[j])
                throw std::invalid_argument("variable " + p.var_tags[j] + " has lo > hi");
        }
        for (const auto& r : p.rows) {
            if (is_bad(r.rhs)) throw std::invalid_argument("LP rhs contains NaN");
            for (auto [j, a] : r.coeffs) {
                if (j < 0 || static_cast<std::size_t>(j) >= n)
                    throw std::invalid_argument("row " + r.tag + " references unknown column");
                if (is_bad(a)) throw std::invalid_argument("LP coefficient contains NaN");
            }
        }
    }

    void normalize() {
        const std::size_t n = p.num_vars();
        shift.assign(n, 0.0);
        std::vector<std::vector<std::pair<std::size_t, double>>> cols_of_ext(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (std::isfinite(p.lo[j])) {
                shift[j] = p.lo[j];
                ext.push_back(static_cast<int>(j));
                mode.push_back(+1);
                ucap.push_back(p.hi[j] - p.lo[j]);
                cost2.push_back(p.obj[j]);
            } else if (std::isfinite(p.hi[j])) {
                shift[j] = p.hi[j];
                ext.push_back(static_cast<int>(j));
                mode.push_back(-1);
                ucap.push_back(kInf);
                cost2.push_back(-p.obj[j]);
            } else {
                ext.push_back(static_cast<int>(j));
                mode.push_back(+2);
                ucap.push_back(kInf);
                cost2.push_back(p.obj[j]);
                ext.push_back(static_cast<int>(j));
                mode.push_back(-2);
                ucap.push_back(kInf);
                cost2.push_back(-p.obj[j]);
            }
        }
        ns = ext.size();
        m = p.num_rows();
        ntot = ns + m;

        // map external var -> its internal columns
        std::vector<std::vector<std::size_t>> of_ext(n);
        for (std::size_t c = 0; c < ns; ++c) of_ext[static_cast<std::size_t>(ext[c])].push_back(c);

        bprime.assign(m, 0.0);
        rowsd.assign(m * ntot, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double b = p.rows[i].rhs;
            for (auto [j, a] : p.rows[i].coeffs) {
                b -= a * shift[static_cast<std::size_t>(j)];
                for (std::size_t c : of_ext[static_cast<std::size_t>(j)]) {
                    const double sgn = (mode[c] == -1 || mode[c] == -2) ? -1.0 : 1.0;
                    rowsd[i * ntot + c] += sgn * a;
                }
            }
            bprime[i] = b;
        }
        sigma.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            sigma[i] = bprime[i] >= 0.0 ? 1.0 : -1.0;
            rowsd[i * ntot + ns + i] = sigma[i];
        }
        for (std::size_t i = 0; i < m; ++i) {
            ucap.push_back(kInf);
            cost2.push_back(0.0);
        }
        iter_cap = static_cast<long>(opt.iter_cap_factor) * static_cast<long>(m + ntot);
        rebuild_every = std::max<long>(200, static_cast<long>(m));
    }

    bool is_artificial(int col) const { return static_cast<std::size_t>(col) >= ns; }

    void crash_and_build() {
        // structural singleton columns make a diagonal starting basis
        std::vector<int> nnz_count(ns, 0);
        std::vector<std::size_t> nnz_row(ns, 0);
        std::vector<double> nnz_val(ns, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < ns; ++c) {
                double a = rowsd[i * ntot + c];
                if (std::fabs(a) > opt.tol_pivot) {
                    ++nnz_count[c];
                    nnz_row[c] = i;
                    nnz_val[c] = a;
                }
            }
        basis.assign(m, -1);
        stat.assign(ntot, NB_LO);
        std::vector<char> row_used(m, 0);
        for (std::size_t c = 0; c < ns; ++c) {
            if (nnz_count[c] != 1) continue;
            std::size_t i = nnz_row[c];
            if (row_used[i]) continue;
            double v = bprime[i] / nnz_val[c];
            if (v < -1e-12 || v > ucap[c] + 1e-12) continue;
            basis[i] = static_cast<int>(c);
            row_used[i] = 1;
        }
        for (std::size_t i = 0; i < m; ++i)
            if (basis[i] < 0) basis[i] = static_cast<int>(ns + i);

        // starting basis is diagonal: scale each row by its pivot
        T.assign(m * ntot, 0.0);
        xB.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t bc = static_cast<std::size_t>(basis[i]);
            const double piv = rowsd[i * ntot + bc];
            for (std::size_t j = 0; j < ntot; ++j) Tat(i, j) = rowsd[i * ntot + j] / piv;
            xB[i] = bprime[i] / piv;
            if (xB[i] < 0.0 && xB[i] > -1e-12) xB[i] = 0.0;
            stat[bc] = BASIC;
        }

        d1.assign(ntot, 0.0);
        d2 = cost2;
        for (std::size_t j = 0; j < ntot; ++j) d1[j] = j >= ns ? 1.0 : 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t bc = static_cast<std::size_t>(basis[i]);
            const double c1b = bc >= ns ? 1.0 : 0.0;
            const double c2b = cost2[bc];
            if (c1b != 0.0)
                for (std::size_t j = 0; j < ntot; ++j) d1[j] -= c1b * Tat(i, j);
            if (c2b != 0.0)
                for (std::size_t j = 0; j < ntot; ++j) d2[j] -= c2b * Tat(i, j);
        }
    }

    double phase1_value() const {
        double v = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (is_artificial(basis[i])) v += xB[i];
        return v;
    }

    // Applies the basis change entering column s (direction dir from its
    // bound), leaving row r at step length t, then row-reduces.
    void pivot(std::size_t r, std::size_t s, int dir, double t, bool leave_to_upper,
               bool phase1) {
        ++since_rebuild;
        const double xs_new = dir > 0 ? t : ucap[s] - t;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r) continue;
            xB[i] -= dir * Tat(i, s) * t;
        }
        const int lv = basis[r];
        stat[static_cast<std::size_t>(lv)] = leave_to_upper ? NB_UP : NB_LO;
        if (phase1 && is_artificial(lv)) ucap[static_cast<std::size_t>(lv)] = 0.0;
        basis[r] = static_cast<int>(s);
        stat[s] = BASIC;
        xB[r] = xs_new;

        const double piv = Tat(r, s);
        for (std::size_t j = 0; j < ntot; ++j) Tat(r, j) /= piv;
        Tat(r, s) = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r) continue;
            const double f = Tat(i, s);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < ntot; ++j) Tat(i, j) -= f * Tat(r, j);
            Tat(i, s) = 0.0;
        }
        auto reduce_obj = [&](std::vector<double>& d) {
            const double f = d[s];
            if (f == 0.0) return;
            for (std::size_t j = 0; j < ntot; ++j) d[j] -= f * Tat(r, j);
            d[s] = 0.0;
        };
        reduce_obj(d1);
        reduce_obj(d2);
    }

    enum class LoopExit { OptimalPhase, Unbounded };

    // Runs Bland's-rule iterations against the given objective row. On
    // Unbounded, 'unb_col'/'unb_dir' describe the improving direction.
    LoopExit run(std::vector<double>& d, bool phase1, std::size_t& unb_col, int& unb_dir) {
        for (;;) {
            if (++iterations > iter_cap)
                throw SolverStalled("simplex iteration cap exceeded after " +
                                    std::to_string(iterations) + " iterations");
            if (since_rebuild >= rebuild_every) rebuild_from_basis();
            // entering column: least-index Bland rule
            std::size_t s = ntot;
            int dir = 0;
            for (std::size_t j = 0; j < ntot; ++j) {
                if (stat[j] == BASIC) continue;
                if (ucap[j] <= 0.0) continue; // fixed or locked
                if (!phase1 && j >= ns) continue;
                if (stat[j] == NB_LO && d[j] < -kEnterTol) { s = j; dir = +1; break; }
                if (stat[j] == NB_UP && d[j] > kEnterTol) { s = j; dir = -1; break; }
            }
            if (s == ntot) {
                // only declare the phase optimal against exact reduced costs
                if (since_rebuild == 0) return LoopExit::OptimalPhase;
                rebuild_from_basis();
                continue;
            }

            // Two-pass ratio test. Pass 1 finds the smallest ratio with each
            // row's bound relaxed by an absolute slack, so pass 2 may prefer a
            // larger pivot element among near-ties: stepping to the chosen
            // row's own ratio then overdraws any other row by at most the
            // slack, independent of pivot magnitudes or basis conditioning.
            constexpr double kSnapTol = 1e-9;
            double trel = kInf;
            for (std::size_t i = 0; i < m; ++i) {
                const double w = dir * Tat(i, s);
                if (w > opt.tol_pivot) {
                    trel = std::min(trel, (std::max(xB[i], 0.0) + kSnapTol) / w);
                } else if (w < -opt.tol_pivot) {
                    const double ub = ucap[static_cast<std::size_t>(basis[i])];
                    if (std::isfinite(ub))
                        trel = std::min(trel, (std::max(ub - xB[i], 0.0) + kSnapTol) / (-w));
                }
            }
            const double tflip = ucap[s];

            if (tflip <= trel) {
                if (!std::isfinite(tflip)) {
                    if (phase1)
                        throw SolverStalled("phase-1 objective appears unbounded");
                    unb_col = s;
                    unb_dir = dir;
                    return LoopExit::Unbounded;
                }
                for (std::size_t i = 0; i < m; ++i) xB[i] -= dir * Tat(i, s) * tflip;
                stat[s] = stat[s] == NB_LO ? NB_UP : NB_LO;
                ++since_rebuild;
                continue;
            }

            // pass 2: among rows whose exact ratio fits under the relaxed
            // minimum, take the largest pivot magnitude (tiny pivots breed
            // near-singular bases), ties by least basis column
            std::size_t r = m;
            bool to_upper = false;
            double tstep = 0.0, wbest = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double w = dir * Tat(i, s);
                const double aw = std::fabs(w);
                if (aw <= opt.tol_pivot) continue;
                double t;
                bool up;
                if (w > 0.0) {
                    t = std::max(xB[i], 0.0) / w;
                    up = false;
                } else {
                    const double ub = ucap[static_cast<std::size_t>(basis[i])];
                    if (!std::isfinite(ub)) continue;
                    t = std::max(ub - xB[i], 0.0) / aw;
                    up = true;
                }
                if (t > trel) continue;
                if (r == m || aw > wbest ||
                    (aw == wbest && basis[i] < basis[r])) {
                    r = i;
                    to_upper = up;
                    tstep = t;
                    wbest = aw;
                }
            }
            if (r == m)
                throw SolverStalled("ratio test found no pivot row");
            pivot(r, s, dir, tstep, to_upper, phase1);
        }
    }

    // After a feasible phase 1, pivot artificials out of the basis where the
    // row is not redundant so unbounded rays stay structural.
    void drive_out_artificials() {
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_artificial(basis[i])) continue;
            std::size_t best = ntot;
            double bestv = 1e-9;
            for (std::size_t j = 0; j < ns; ++j) {
                if (stat[j] == BASIC) continue;
                const double v = std::fabs(Tat(i, j));
                if (v > bestv) { bestv = v; best = j; }
            }
            if (best == ntot) continue; // redundant row, artificial stays at ~0
            const int dir = stat[best] == NB_LO ? +1 : -1;
            pivot(i, best, dir, 0.0, false, true);
        }
        // lock every artificial, basic ones included, so phase 2 cannot grow them
        for (std::size_t j = ns; j < ntot; ++j) ucap[j] = 0.0;
    }

    std::vector<double> basis_matrix() const {
        std::vector<double> B(m * m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t bc = static_cast<std::size_t>(basis[i]);
            for (std::size_t r = 0; r < m; ++r) B[r * m + i] = rowsd[r * ntot + bc];
        }
        return B;
    }

    // Rebuilds the working tableau, basic values, and both reduced-cost rows
    // exactly from the current basis, wiping accumulated pivot drift. Long
    // degenerate runs otherwise corrupt pivot choices badly enough to walk
    // onto a singular basis or cycle.
    void rebuild_from_basis() {
        since_rebuild = 0;
        Lu lu;
        if (!lu.factor(basis_matrix(), m))
            throw SolverStalled("working basis became numerically singular");

        std::vector<double> col(m), t;
        std::vector<double> fresh(m * ntot, 0.0);
        for (std::size_t j = 0; j < ntot; ++j) {
            for (std::size_t i = 0; i < m; ++i) col[i] = rowsd[i * ntot + j];
            t = lu.solve(col);
            for (std::size_t i = 0; i < m; ++i) fresh[i * ntot + j] = t[i];
        }
        T = std::move(fresh);

        std::vector<double> rhs = bprime;
        for (std::size_t j = 0; j < ntot; ++j) {
            if (stat[j] != NB_UP || ucap[j] == 0.0) continue;
            for (std::size_t i = 0; i < m; ++i) rhs[i] -= rowsd[i * ntot + j] * ucap[j];
        }
        xB = lu.solve(rhs);
        for (std::size_t i = 0; i < m; ++i) {
            const double u = ucap[static_cast<std::size_t>(basis[i])];
            if (xB[i] < -1e-7 || (std::isfinite(u) && xB[i] > u + 1e-7))
                throw SolverStalled("refactorization revealed lost primal feasibility");
            if (xB[i] < 0.0 && xB[i] > -1e-9) xB[i] = 0.0;
        }

        auto redo = [&](std::vector<double>& d, auto cost_of) {
            std::vector<double> cb(m);
            for (std::size_t i = 0; i < m; ++i)
                cb[i] = cost_of(static_cast<std::size_t>(basis[i]));
            const std::vector<double> y = lu.solve_transposed(cb);
            for (std::size_t j = 0; j < ntot; ++j) {
                if (stat[j] == BASIC) { d[j] = 0.0; continue; }
                double v = cost_of(j);
                for (std::size_t i = 0; i < m; ++i) v -= y[i] * rowsd[i * ntot + j];
                d[j] = v;
            }
        };
        redo(d1, [&](std::size_t j) { return j >= ns ? 1.0 : 0.0; });
        redo(d2, [&](std::size_t j) { return cost2[j]; });
    }

    // Recomputes basic values and duals from the basis by direct
    // factorization, wiping accumulated tableau drift.
    void refresh(bool want_primal, const std::vector<double>& cb, std::vector<double>& y) {
        if (m == 0) { y.clear(); return; }
        Lu lu;
        if (!lu.factor(basis_matrix(), m))
            throw SolverStalled("final basis is numerically singular");
        if (want_primal) {
            std::vector<double> rhs = bprime;
            for (std::size_t j = 0; j < ntot; ++j) {
                if (stat[j] != NB_UP) continue;
                const double u = ucap[j];
                if (u == 0.0) continue;
                for (std::size_t i = 0; i < m; ++i) rhs[i] -= rowsd[i * ntot + j] * u;
            }
            xB = lu.solve(rhs);
        }
        y = lu.solve_transposed(cb);
    }

    std::vector<double> external_x() const {
        std::vector<double> x(p.num_vars(), 0.0);
        auto internal_value = [&](std::size_t c) -> double {
            if (stat[c] == BASIC) {
                for (std::size_t i = 0; i < m; ++i)
                    if (static_cast<std::size_t>(basis[i]) == c) return xB[i];
                return 0.0;
            }
            return stat[c] == NB_UP ? ucap[c] : 0.0;
        };
        for (std::size_t c = 0; c < ns; ++c) {
            const double v = internal_value(c);
            const std::size_t j = static_cast<std::size_t>(ext[c]);
            switch (mode[c]) {
                case +1: x[j] = shift[j] + v; break;
                case -1: x[j] = shift[j] - v; break;
                case +2: x[j] += v; break;
                case -2: x[j] -= v; break;
            }
        }
        return x;
    }

    std::vector<double> external_ray(std::size_t s, int dir) const {
        std::vector<double> delta(ns + m, 0.0);
        delta[s] = dir;
        for (std::size_t i = 0; i < m; ++i)
            delta[static_cast<std::size_t>(basis[i])] = -dir * Tat(i, s);
        std::vector<double> r(p.num_vars(), 0.0);
        for (std::size_t c = 0; c < ns; ++c) {
            const double v = delta[c];
            if (v == 0.0) continue;
            const std::size_t j = static_cast<std::size_t>(ext[c]);
            switch (mode[c]) {
                case +1: r[j] += v; break;
                case -1: r[j] -= v; break;
                case +2: r[j] += v; break;
                case -2: r[j] -= v; break;
            }
        }
        double nrm = 0.0;
        for (double v : r) nrm = std::max(nrm, std::fabs(v));
        if (nrm > 0.0)
            for (double& v : r) v /= nrm;
        return r;
    }
};

} // namespace

int LpProblem::add_var(const std::string& tag, double lo_bound, double hi_bound, double cost) {
    obj.push_back(cost);
    lo.push_back(lo_bound);
    hi.push_back(hi_bound);
    var_tags.push_back(tag);
    return static_cast<int>(obj.size()) - 1;
}

void LpProblem::add_row(const std::string& tag, double rhs,
                        std::vector<std::pair<int, double>> coeffs) {
    // merge duplicate columns so downstream code can assume uniqueness
    std::sort(coeffs.begin(), coeffs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<int, double>> merged;
    for (auto [j, a] : coeffs) {
        if (!merged.empty() && merged.back().first == j)
            merged.back().second += a;
        else
            merged.emplace_back(j, a);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& e) { return e.second == 0.0; }),
                 merged.end());
    rows.push_back({tag, rhs, std::move(merged)});
}

LpSolution solve(const LpProblem& p, const LpOptions& opt) {
    Simplex sx(p, opt);
    sx.validate_input();
    sx.normalize();
    sx.crash_and_build();

    LpSolution sol;
    std::size_t unb_col = 0;
    int unb_dir = 0;

    // phase 1
    if (sx.m > 0) {
        sx.run(sx.d1, true, unb_col, unb_dir);
        const double v1 = sx.phase1_value();
        if (v1 > opt.tol_feas) {
            std::vector<double> c1b(sx.m, 0.0);
            for (std::size_t i = 0; i < sx.m; ++i)
                c1b[i] = sx.is_artificial(sx.basis[i]) ? 1.0 : 0.0;
            std::vector<double> y;
            sx.refresh(false, c1b, y);
            double nrm = 0.0;
            for (double v : y) nrm = std::max(nrm, std::fabs(v));
            if (nrm > 0.0)
                for (double& v : y) v /= nrm;
            sol.status = LpStatus::Infeasible;
            sol.farkas = y;
            sol.iterations = sx.iterations;
            if (!verify_certificate(p, y, std::min(opt.tol_gap, 0.45 * v1 / std::max(nrm, 1.0))))
                throw SolverStalled("infeasibility certificate failed self-verification");
            return sol;
        }
        sx.drive_out_artificials();
    }

    // phase 2
    const auto exit2 = sx.run(sx.d2, false, unb_col, unb_dir);
    sol.iterations = sx.iterations;
    if (exit2 == Simplex::LoopExit::Unbounded) {
        sol.status = LpStatus::Unbounded;
        sol.ray = sx.external_ray(unb_col, unb_dir);
        return sol;
    }

    std::vector<double> c2b(sx.m, 0.0);
    for (std::size_t i = 0; i < sx.m; ++i)
        c2b[i] = sx.cost2[static_cast<std::size_t>(sx.basis[i])];
    std::vector<double> y;
    sx.refresh(true, c2b, y);

    // feasibility sanity after the exact refresh
    for (std::size_t i = 0; i < sx.m; ++i) {
        const double u = sx.ucap[static_cast<std::size_t>(sx.basis[i])];
        if (sx.xB[i] < -10.0 * opt.tol_feas ||
            (std::isfinite(u) && sx.xB[i] > u + 10.0 * opt.tol_feas))
            throw SolverStalled("optimal basis lost primal feasibility");
    }

    sol.status = LpStatus::Optimal;
    sol.x = sx.external_x();
    sol.duals = y.empty() ? std::vector<double>(p.num_rows(), 0.0) : y;
    sol.objective = 0.0;
    for (std::size_t j = 0; j < p.num_vars(); ++j) sol.objective += p.obj[j] * sol.x[j];
    sol.reduced_costs = p.obj;
    for (std::size_t i = 0; i < p.num_rows(); ++i)
        for (auto [j, a] : p.rows[i].coeffs)
            sol.reduced_costs[static_cast<std::size_t>(j)] -= sol.duals[i] * a;
    return sol;
}

bool verify_certificate(const LpProblem& p, const std::vector<double>& y, double tol) {
    if (y.size() != p.num_rows()) return false;
    double ynorm = 0.0;
    for (double v : y) ynorm = std::max(ynorm, std::fabs(v));
    const double zero_tol = 1e-9 * (1.0 + ynorm);

    std::vector<double> w(p.num_vars(), 0.0);
    double yb = 0.0;
    for (std::size_t i = 0; i < p.num_rows(); ++i) {
        yb += y[i] * p.rows[i].rhs;
        for (auto [j, a] : p.rows[i].coeffs) w[static_cast<std::size_t>(j)] += y[i] * a;
    }
    double sup = 0.0;
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        if (w[j] > zero_tol) {
            if (!std::isfinite(p.hi[j])) return false;
            sup += w[j] * p.hi[j];
        } else if (w[j] < -zero_tol) {
            if (!std::isfinite(p.lo[j])) return false;
            sup += w[j] * p.lo[j];
        }
    }
    return yb - sup > tol;
}

std::vector<std::vector<double>> enumerate_vertices(const LpProblem& p, int max_vars) {
    const std::size_t n = p.num_vars();
    const std::size_t m = p.num_rows();
    if (n > static_cast<std::size_t>(max_vars) || n > 20)
        throw std::invalid_argument("enumerate_vertices: problem too large");

    // dense rows
    std::vector<std::vector<double>> A(m, std::vector<double>(n, 0.0));
    std::vector<double> b(m);
    for (std::size_t i = 0; i < m; ++i) {
        b[i] = p.rows[i].rhs;
        for (auto [j, a] : p.rows[i].coeffs) A[i][static_cast<std::size_t>(j)] += a;
    }

    const std::size_t kmax = std::min(m, n);
    std::vector<std::vector<double>> found;

    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const std::size_t k = static_cast<std::size_t>(__builtin_popcount(mask));
        if (k > kmax) continue;
        std::vector<std::size_t> bas, non;
        for (std::size_t j = 0; j < n; ++j)
            (mask >> j & 1u) ? bas.push_back(j) : non.push_back(j);

        // nonbasic bound assignments: bit per nonbasic var, 0 = lo, 1 = hi
        const std::size_t nn = non.size();
        for (std::uint32_t amask = 0; amask < (1u << nn); ++amask) {
            std::vector<double> x(n, 0.0);
            bool ok = true;
            for (std::size_t t = 0; t < nn && ok; ++t) {
                const std::size_t j = non[t];
                const double v = (amask >> t & 1u) ? p.hi[j] : p.lo[j];
                if (!std::isfinite(v)) ok = false;
                x[j] = v;
            }
            if (!ok) continue;

            // solve A_bas xb = b - A_non x_non by Gaussian elimination
            std::vector<std::vector<double>> M(m, std::vector<double>(k + 1, 0.0));
            for (std::size_t i = 0; i < m; ++i) {
                double r = b[i];
                for (std::size_t t = 0; t < nn; ++t) r -= A[i][non[t]] * x[non[t]];
                for (std::size_t t = 0; t < k; ++t) M[i][t] = A[i][bas[t]];
                M[i][k] = r;
            }
            std::size_t row = 0;
            bool unique = true;
            for (std::size_t col = 0; col < k && unique; ++col) {
                std::size_t piv = row;
                for (std::size_t i = row + 1; i < m; ++i)
                    if (std::fabs(M[i][col]) > std::fabs(M[piv][col])) piv = i;
                if (piv >= m || std::fabs(M[piv][col]) < 1e-10) { unique = false; break; }
                std::swap(M[row], M[piv]);
                for (std::size_t i = 0; i < m; ++i) {
                    if (i == row) continue;
                    const double f = M[i][col] / M[row][col];
                    if (f == 0.0) continue;
                    for (std::size_t t = col; t <= k; ++t) M[i][t] -= f * M[row][t];
                }
                ++row;
            }
            if (!unique) continue;
            // remaining rows must be consistent
            for (std::size_t i = row; i < m && ok; ++i)
                if (std::fabs(M[i][k]) > 1e-7) ok = false;
            if (!ok) continue;
            // back out basic values (rows 0..k-1 hold the diagonalized system)
            {
                std::size_t rr = 0;
                for (std::size_t col = 0; col < k; ++col) {
                    x[bas[col]] = M[rr][k] / M[rr][col];
                    ++rr;
                }
            }
            for (std::size_t j = 0; j < n && ok; ++j)
                if (x[j] < p.lo[j] - 1e-9 || x[j] > p.hi[j] + 1e-9) ok = false;
            if (!ok) continue;
            // exact residual check against all rows
            for (std::size_t i = 0; i < m && ok; ++i) {
                double r = -b[i];
                for (std::size_t j = 0; j < n; ++j) r += A[i][j] * x[j];
                if (std::fabs(r) > 1e-7) ok = false;
            }
            if (!ok) continue;
            for (double& v : x) {
                v = std::round(v * 1e9) / 1e9;
                if (v == 0.0) v = 0.0;
            }
            found.push_back(std::move(x));
        }
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end(),
                            [](const auto& a, const auto& b) {
                                for (std::size_t j = 0; j < a.size(); ++j)
                                    if (std::fabs(a[j] - b[j]) > 1e-9) return false;
                                return true;
                            }),
                found.end());
    return found;
}

std::string dump_problem(const LpProblem& p) {
    std::ostringstream os;
    os << "minimize";
    bool first = true;
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        if (p.obj[j] == 0.0) continue;
        os << (first ? " " : " + ") << fmt_g(p.obj[j]) << "*" << p.var_tags[j];
        first = false;
    }
    if (first) os << " 0";
    os << "\n";
    for (const auto& r : p.rows) {
        os << "  " << r.tag << ":";
        for (auto [j, a] : r.coeffs)
            os << " " << (a >= 0 ? "+" : "") << fmt_g(a) << "*"
               << p.var_tags[static_cast<std::size_t>(j)];
        os << " = " << fmt_g(r.rhs) << "\n";
    }
    for (std::size_t j = 0; j < p.num_vars(); ++j)
        os << "  " << p.var_tags[j] << " in [" << fmt_g(p.lo[j]) << ", " << fmt_g(p.hi[j])
           << "]\n";
    return os.str();
}

} // namespace maxcal
