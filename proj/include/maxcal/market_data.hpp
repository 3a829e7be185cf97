#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxcal {

class ParseError : public std::runtime_error {
  public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CallQuote {
    double strike = 0.0;
    double price = 0.0;
};

struct BarrierQuote {
    double level = 0.0;
    double price = 0.0; // one-touch probability quote, in [0, 1]
};

struct MaturityQuotes {
    double t = 0.0;
    std::vector<CallQuote> calls;      // strictly increasing strikes
    std::vector<BarrierQuote> barriers; // strictly increasing levels above spot
};

// Normalized market snapshot. 'upper_bound' is the right endpoint N of the
// support used by the calibration; it must exceed every strike and must not
// be below any barrier level (a barrier exactly at N is legal and means the
// one-touch of the support boundary).
struct MarketQuotes {
    double spot = 0.0;
    double upper_bound = 0.0;
    std::vector<MaturityQuotes> maturities;

    std::size_t maturity_count() const { return maturities.size(); }
    double max_strike() const;
    double max_barrier() const;
};

// Parses and normalizes a quote document:
//   {"spot": s, "upper_bound": n?, "maturities":
//     [{"t": t, "calls": [{"strike": k, "price": p}, ...],
//                "barriers": [{"level": b, "price": p}, ...]}, ...]}
// Maturities are sorted by t, calls by strike, barriers by level. Duplicate
// strikes/levels with equal prices are collapsed; conflicting duplicates are
// a ParseError. A missing upper_bound defaults to 2 * max(strike, barrier)
// (2 * spot when there are no instruments).
MarketQuotes parse_quotes(const std::string& json_text);

// Normalized echo of a quote set (stable key order, %.12g numbers).
std::string serialize_quotes(const MarketQuotes& q);

enum class Severity { Fatal, Warning };

struct Violation {
    std::string rule;   // stable id, e.g. "CALL_MONOTONE"
    int maturity = 0;   // 1-based; 0 = not tied to a single maturity
    double location = 0.0; // strike or barrier level; NaN when not applicable
    Severity severity = Severity::Fatal;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool has_fatal() const;
    bool ok() const { return violations.empty(); }
};

// Static screens that do not require solving anything: monotonicity and
// convexity of calls in strike, slope bounds, price ranges, barrier
// monotonicity in level, calendar monotonicity across maturities, and
// consistency of the upper bound. Deeper consistency is the calibrator's job.
ValidationReport validate(const MarketQuotes& q);

// Shared evaluation grid 0 = x_0 < x_1 < ... < x_G = N. Contains 0, the spot,
// every strike, every barrier level (plus any extra levels supplied), and N;
// each base cell is subdivided into (refine + 1) equal parts.
class Grid {
  public:
    static std::shared_ptr<const Grid> build(const MarketQuotes& q, int refine);
    static std::shared_ptr<const Grid> build(const MarketQuotes& q, int refine,
                                             const std::vector<double>& extra_levels);
    // Direct construction from raw points (tests, conversions). Points must
    // start at 0, be strictly increasing.
    static std::shared_ptr<const Grid> from_points(std::vector<double> points);

    const std::vector<double>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    double upper() const { return points_.back(); }
    // width of cell [x_i, x_{i+1}]
    double spacing(std::size_t i) const { return points_[i + 1] - points_[i]; }
    // index of a node equal to 'value' (within tolerance); throws if absent
    std::size_t index_of(double value) const;
    bool has_point(double value) const;

  private:
    explicit Grid(std::vector<double> pts) : points_(std::move(pts)) {}
    std::vector<double> points_;
};

} // namespace maxcal
