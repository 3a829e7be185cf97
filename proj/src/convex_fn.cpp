#include "maxcal/convex_fn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace maxcal {

PLConvex::PLConvex(std::shared_ptr<const Grid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw std::invalid_argument("PLConvex: null grid");
    if (values_.size() != grid_->size())
        throw std::invalid_argument("PLConvex: values/grid size mismatch");
}

double PLConvex::operator()(double x) const {
    const auto& pts = grid_->points();
    if (x < pts.front() - 1e-12 || x > pts.back() + 1e-12) {
        std::ostringstream os;
        os << "evaluation point " << x << " outside [0, " << pts.back() << "]";
        throw std::domain_error(os.str());
    }
    x = std::clamp(x, pts.front(), pts.back());
    auto it = std::upper_bound(pts.begin(), pts.end(), x);
    if (it == pts.end()) return values_.back();
    std::size_t hi = static_cast<std::size_t>(it - pts.begin());
    if (hi == 0) return values_.front();
    std::size_t lo = hi - 1;
    double t = (x - pts[lo]) / (pts[hi] - pts[lo]);
    return values_[lo] + t * (values_[hi] - values_[lo]);
}

double PLConvex::left_slope(std::size_t i) const {
    if (i == 0 || i >= values_.size())
        throw std::out_of_range("left_slope index");
    return (values_[i] - values_[i - 1]) / grid_->spacing(i - 1);
}

double PLConvex::right_slope(std::size_t i) const {
    if (i + 1 >= values_.size())
        throw std::out_of_range("right_slope index");
    return (values_[i + 1] - values_[i]) / grid_->spacing(i);
}

DiscreteMeasure::DiscreteMeasure(std::shared_ptr<const Grid> grid, std::vector<double> weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
    if (!grid_) throw std::invalid_argument("DiscreteMeasure: null grid");
    if (weights_.size() != grid_->size())
        throw std::invalid_argument("DiscreteMeasure: weights/grid size mismatch");
}

double DiscreteMeasure::mass() const {
    return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

double DiscreteMeasure::mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * (*grid_)[i];
    return s;
}

std::vector<DiscreteMeasure::Atom> DiscreteMeasure::atoms() const {
    std::vector<Atom> out;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        if (std::fabs(weights_[i]) > 1e-14) out.push_back({(*grid_)[i], weights_[i]});
    return out;
}

DiscreteMeasure to_measure(const PLConvex& f, double tol) {
    const std::size_t g = f.nodes() - 1;
    std::vector<double> w(g + 1, 0.0);
    double prev_slope = f.right_slope(0);
    for (std::size_t i = 1; i <= g; ++i) {
        double next_slope = (i < g) ? f.right_slope(i) : 0.0;
        double atom = next_slope - prev_slope;
        if (atom < -tol) {
            std::ostringstream os;
            os << "function is not convex: negative atom " << atom << " at x = "
               << f.grid()[i];
            throw std::invalid_argument(os.str());
        }
        w[i] = std::max(atom, 0.0);
        prev_slope = next_slope;
    }
    return DiscreteMeasure(f.grid_ptr(), std::move(w));
}

PLConvex from_measure(const DiscreteMeasure& nu) {
    const auto& pts = nu.grid().points();
    const auto& w = nu.weights();
    const std::size_t n = pts.size();
    // accumulate from the right: value_i = value_{i+1} + tail_mass * h_i
    std::vector<double> v(n, 0.0);
    double tail = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) {
        tail += w[i + 1];
        v[i] = v[i + 1] + tail * (pts[i + 1] - pts[i]);
    }
    return PLConvex(nu.grid_ptr(), std::move(v));
}

namespace {

void addv(ValidationReport& r, std::string rule, double location, std::string message) {
    r.violations.push_back({std::move(rule), 0, location, Severity::Fatal, std::move(message)});
}

} // namespace

ValidationReport check_call_price_function(const PLConvex& f, std::optional<double> spot,
                                           double tol) {
    ValidationReport r;
    const std::size_t g = f.nodes() - 1;
    const auto& pts = f.grid().points();

    for (std::size_t i = 0; i <= g; ++i)
        if (f.value_at_node(i) < -tol)
            addv(r, "FN_NONNEG", pts[i], "negative value " + std::to_string(f.value_at_node(i)));

    if (std::fabs(f.value_at_node(g)) > tol)
        addv(r, "FN_TERMINAL_ZERO", pts[g],
             "value at the upper bound must be 0, got " + std::to_string(f.value_at_node(g)));

    double prev = -1.0; // admissible slopes live in [-1, 0]
    for (std::size_t i = 0; i < g; ++i) {
        double s = f.right_slope(i);
        if (s < -1.0 - tol || s > tol)
            addv(r, "FN_SLOPE_BOUND", pts[i],
                 "slope " + std::to_string(s) + " outside [-1, 0]");
        if (i > 0 && s < prev - tol)
            addv(r, "FN_CONVEX", pts[i], "slopes decrease at x = " + std::to_string(pts[i]));
        prev = s;
    }

    if (spot) {
        if (std::fabs(f.value_at_node(0) - *spot) > tol)
            addv(r, "FN_SPOT_VALUE", pts[0],
                 "value at 0 must equal spot " + std::to_string(*spot));
        if (std::fabs(f.right_slope(0) + 1.0) > tol)
            addv(r, "FN_UNIT_SLOPE", pts[0], "initial slope must be exactly -1");
    }
    return r;
}

} // namespace maxcal
