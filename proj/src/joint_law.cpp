#include "maxcal/joint_law.hpp"

#include "maxcal/json_writer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace maxcal {

namespace {

constexpr double kLevelTol = 1e-9;
constexpr double kMassEps = 1e-12;

// slope of the segment containing x, right-continuous at nodes; 0 at x = N
double right_slope_at(const PLConvex& f, double x) {
    const Grid& g = f.grid();
    const std::size_t G = g.size() - 1;
    if (x < 0.0 || x > g.upper() + kLevelTol)
        throw std::domain_error("right_slope_at: x outside [0, N]");
    if (x >= g.upper() - kLevelTol) return 0.0;
    std::size_t i = 0;
    while (i + 1 <= G && g[i + 1] <= x + kLevelTol) ++i;
    return f.right_slope(i);
}

} // namespace

DiscreteMeasure JointPmf::marginal() const {
    std::vector<double> w(grid->size(), 0.0);
    for (const auto& b : bands)
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += b.weights()[i];
    return DiscreteMeasure(grid, std::move(w));
}

JointPmf band_pmf(const Decomposition& d, std::size_t l, double tol) {
    if (l < 1 || l > d.maturity_count()) throw std::out_of_range("band_pmf: maturity");
    const Grid& g = *d.grid;
    const std::size_t G = g.size() - 1;
    const std::size_t M = d.level_count() - 1;

    JointPmf p;
    p.grid = d.grid;
    p.maturity = l;
    p.spot = d.quotes.spot;
    p.levels = d.levels;
    p.touch = d.touch[l - 1];

    for (std::size_t j = 1; j <= M + 1; ++j) {
        std::vector<double> gv(G + 1, 0.0);
        const double Bj = d.levels[j - 1];
        const double bj = d.touch[l - 1][j];
        for (std::size_t i = 0; i <= G; ++i) {
            double v = d.blocks[l - 1][j - 1].value_at_node(i);
            if (j <= M) v -= bj * std::max(Bj - g[i], 0.0);
            gv[i] = v;
        }
        try {
            p.bands.push_back(to_measure(PLConvex(d.grid, std::move(gv)), tol));
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("band_pmf: band " + std::to_string(j) +
                                     " is not a measure: " + e.what());
        }
        // tiling checks: band totals against the touch probabilities
        const double total = p.bands.back().mass();
        const double want = j <= M ? p.touch[j - 1] - p.touch[j] : p.touch[M];
        if (std::fabs(total - want) > 10.0 * tol + 1e-12)
            throw std::runtime_error("band_pmf: band " + std::to_string(j) + " mass " +
                                     fmt_g(total) + " != " + fmt_g(want));
        if (j <= M) {
            const std::size_t P = g.index_of(Bj);
            for (std::size_t i = P; i <= G; ++i)
                if (std::fabs(p.bands.back().weights()[i]) > tol)
                    throw std::runtime_error("band_pmf: band " + std::to_string(j) +
                                             " has mass at or above its level");
        }
    }
    return p;
}

double joint_tail_below(const Decomposition& d, std::size_t l, std::size_t j, double x) {
    if (l < 1 || l > d.maturity_count()) throw std::out_of_range("joint_tail_below: maturity");
    if (j < 1 || j > d.level_count()) throw std::out_of_range("joint_tail_below: level index");
    const double Bj = d.levels[j - 1];
    if (x < 0.0 || x >= Bj - kLevelTol)
        throw std::domain_error("joint_tail_below: x must lie in [0, B_j)");
    const PLConvex frak = assemble_frak_c(d, l, j);
    const double bj = d.touch[l - 1][j];
    const double p = -right_slope_at(frak, x) - bj;
    return std::clamp(p, 0.0, std::max(1.0 - bj, 0.0));
}

double joint_tail_above(const Decomposition& d, std::size_t l, double x, double B) {
    if (l < 1 || l > d.maturity_count()) throw std::out_of_range("joint_tail_above: maturity");
    const std::size_t M = d.level_count() - 1;
    const double S0 = d.quotes.spot;
    const double Bmax = M >= 1 ? d.levels[M - 1] : S0;
    if (B < S0 - kLevelTol || B > Bmax + kLevelTol)
        throw std::domain_error("joint_tail_above: B outside [S0, B_M]");
    if (x < 0.0 || x > d.grid->upper() + kLevelTol)
        throw std::domain_error("joint_tail_above: x outside [0, N]");

    // anchors B_0 = S0, B_1..B_M
    auto tail_at = [&](std::size_t jj) {
        const double mslope = -right_slope_at(d.u[l - 1], x);
        if (jj == 0) return mslope;
        const double Bj = d.levels[jj - 1];
        const double below = x < Bj - kLevelTol ? joint_tail_below(d, l, jj, x) : 0.0;
        return mslope - below;
    };

    std::size_t hi = 0;
    while (hi <= M && (hi == 0 ? S0 : d.levels[hi - 1]) < B - kLevelTol) ++hi;
    const double Bhi = hi == 0 ? S0 : d.levels[hi - 1];
    if (std::fabs(Bhi - B) <= kLevelTol || hi == 0)
        return std::clamp(tail_at(hi), 0.0, 1.0);
    const double Blo = hi == 1 ? S0 : d.levels[hi - 2];
    const double a = (Bhi - B) / (Bhi - Blo); // weight of the lower anchor
    const double v = a * tail_at(hi - 1) + (1.0 - a) * tail_at(hi);
    return std::clamp(v, 0.0, 1.0);
}

RogersReport rogers_check(const JointPmf& p, const std::vector<double>& extra_levels,
                          double tol) {
    const std::size_t M = p.levels.size() - 1;
    const double S0 = p.spot;

    // anchor values: num_j = E[S 1{M >= B_j}], den_j = P(M >= B_j); band j'
    // covers M in [B_{j'-1}, B_j'), so {M >= B_j} is the union of bands > j
    std::vector<double> num(M + 1, 0.0), den(M + 1, 0.0);
    for (std::size_t j = 0; j <= M; ++j) {
        for (std::size_t jp = j + 1; jp <= M + 1; ++jp) {
            num[j] += p.bands[jp - 1].mean();
            den[j] += p.bands[jp - 1].mass();
        }
    }

    std::vector<double> levels;
    levels.push_back(S0);
    for (std::size_t j = 1; j <= M; ++j) levels.push_back(p.levels[j - 1]);
    for (double e : extra_levels) levels.push_back(e);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end(),
                             [](double a, double b) { return std::fabs(a - b) <= 1e-12; }),
                 levels.end());

    const double Bmax = M >= 1 ? p.levels[M - 1] : S0;
    RogersReport r;
    r.maturity = p.maturity;
    r.tol = tol;

    auto eval = [&](double m, double& nm, double& dn) {
        // The band representation resolves {M >= m} only at band edges: for m
        // in (B_{j-1}, B_j] the representable event is the union of bands with
        // lower edge >= m, i.e. bands above the bracketing anchor.  Using the
        // upper anchor keeps d(m) = B_j >= m and non-decreasing, which is what
        // the conditions guarantee; averaging anchor tails instead would push
        // d strictly below m between anchors for every admissible law.
        std::size_t hi = 0;
        while (hi <= M && (hi == 0 ? S0 : p.levels[hi - 1]) < m - 1e-12) ++hi;
        nm = num[hi];
        dn = den[hi];
    };

    double prev_d = -std::numeric_limits<double>::infinity();
    for (double lv : levels) {
        RogersEntry e;
        e.level = lv;
        if (lv < S0 - 1e-12 || lv > p.grid->upper() + 1e-12) {
            e.skipped = true;
            e.note = "level outside [S0, N]";
        } else if (lv > Bmax + 1e-12) {
            e.skipped = true;
            e.note = "beyond the last quoted level";
        } else {
            double nm = 0.0, dn = 0.0;
            eval(lv, nm, dn);
            if (dn < kMassEps) {
                e.skipped = true;
                e.note = "no mass at or above level";
            } else {
                e.d_value = nm / dn;
                e.pass_floor = e.d_value >= lv - tol;
                if (e.d_value < prev_d - tol) r.pass_monotone = false;
                prev_d = e.d_value;
            }
        }
        r.entries.push_back(std::move(e));
    }
    return r;
}

std::vector<std::vector<double>> state_vol(const JointPmf& p, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("state_vol: lambda must be positive");
    const Grid& g = *p.grid;
    const std::size_t G = g.size() - 1;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<std::vector<double>> out;
    for (const auto& band : p.bands) {
        std::vector<double> row(G + 1, nan);
        const auto& w = band.weights();
        for (std::size_t i = 0; i <= G; ++i) {
            if (w[i] <= kMassEps) continue;
            double transform = 0.0;
            for (std::size_t y = 0; y < i; ++y)
                transform += (g[i] - g[y]) * w[y];
            const double lo = i == 0 ? g[0] : g[i - 1];
            const double hi = i == G ? g[G] : g[i + 1];
            const double cell = (hi - lo) / 2.0;
            row[i] = 2.0 * lambda * transform * cell / w[i];
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_pmf_csv(std::ostream& os, const JointPmf& p) {
    os << "maturity,x,band_lo,band_hi,mass\n";
    for (std::size_t j = 1; j <= p.bands.size(); ++j) {
        const double lo = j == 1 ? p.spot : p.levels[j - 2];
        const double hi = p.levels[j - 1];
        for (const auto& a : p.bands[j - 1].atoms()) {
            if (std::fabs(a.w) <= kMassEps) continue;
            os << p.maturity << ',' << fmt_g(a.x) << ',' << fmt_g(lo) << ',' << fmt_g(hi)
               << ',' << fmt_g(a.w) << '\n';
        }
    }
}

void write_tails_csv(std::ostream& os, const Decomposition& d, std::size_t l) {
    os << "maturity,x,level,tail_prob\n";
    const Grid& g = *d.grid;
    const std::size_t M = d.level_count() - 1;
    for (std::size_t j = 0; j <= M; ++j) {
        const double B = j == 0 ? d.quotes.spot : d.levels[j - 1];
        for (std::size_t i = 0; i < g.size(); ++i)
            os << l << ',' << fmt_g(g[i]) << ',' << fmt_g(B) << ','
               << fmt_g(joint_tail_above(d, l, g[i], B)) << '\n';
    }
}

} // namespace maxcal
