#pragma once

#include "maxcal/market_data.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace maxcal {

// Piecewise linear function sampled on a shared grid. Most uses are convex
// call-transform style functions, but the class itself only stores values;
// convexity is asserted by check_call_price_function / to_measure.
class PLConvex {
  public:
    PLConvex() = default;
    PLConvex(std::shared_ptr<const Grid> grid, std::vector<double> values);

    const Grid& grid() const { return *grid_; }
    const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double value_at_node(std::size_t i) const { return values_[i]; }
    std::size_t nodes() const { return values_.size(); }

    // Linear interpolation; throws std::domain_error outside [0, N].
    double operator()(double x) const;

    // Slope on [x_{i-1}, x_i]; i in [1, G].
    double left_slope(std::size_t i) const;
    // Slope on [x_i, x_{i+1}]; i in [0, G-1].
    double right_slope(std::size_t i) const;

  private:
    std::shared_ptr<const Grid> grid_;
    std::vector<double> values_;
};

// Finite positive measure supported on grid nodes.
class DiscreteMeasure {
  public:
    DiscreteMeasure() = default;
    DiscreteMeasure(std::shared_ptr<const Grid> grid, std::vector<double> weights);

    const Grid& grid() const { return *grid_; }
    const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
    const std::vector<double>& weights() const { return weights_; }

    double mass() const;
    double mean() const;
    struct Atom { double x; double w; };
    // nonzero atoms (|w| > 1e-14) in increasing x
    std::vector<Atom> atoms() const;

  private:
    std::shared_ptr<const Grid> grid_;
    std::vector<double> weights_;
};

// Second-difference extraction: recovers the measure nu with
// f(x) = integral (y - x)^+ nu(dy) for a convex piecewise linear f that is
// flat at the right end. The atom at node i >= 1 equals slope_i - slope_{i-1}
// with the slope beyond the last node taken as 0. Atoms more negative than
// -tol throw std::invalid_argument (non-convex input); small negatives are
// clamped to 0. No atom is placed at node 0.
DiscreteMeasure to_measure(const PLConvex& f, double tol = 1e-9);

// Inverse transform: f(x_i) = sum_y (y - x_i)^+ nu({y}).
PLConvex from_measure(const DiscreteMeasure& nu);

// Screens a function for the shape every call-transform must have: convex,
// nonnegative, nonincreasing with slopes in [-1, 0], and zero at the right
// end. When 'spot' is given the left end must satisfy f(0) = spot with slope
// exactly -1 (total mass one). Rule ids: FN_CONVEX, FN_NONNEG,
// FN_TERMINAL_ZERO, FN_SLOPE_BOUND, FN_UNIT_SLOPE, FN_SPOT_VALUE.
ValidationReport check_call_price_function(const PLConvex& f,
                                           std::optional<double> spot = std::nullopt,
                                           double tol = 1e-9);

} // namespace maxcal
