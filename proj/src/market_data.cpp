#include "maxcal/market_data.hpp"

#include "maxcal/json_writer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace maxcal {

namespace {

using nlohmann::json;

constexpr double kDupTol = 1e-12;
constexpr double kNodeTol = 1e-9;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ParseError(path + ": " + what);
}

double want_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

const json& want_member(const json& j, const char* name, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(name);
    if (it == j.end()) fail(path, std::string("missing required key \"") + name + "\"");
    return *it;
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

template <typename T, typename GetKey>
void sort_and_dedupe(std::vector<T>& items, GetKey key, double T::* price,
                     const std::string& path, const char* noun) {
    std::stable_sort(items.begin(), items.end(),
                     [&](const T& a, const T& b) { return key(a) < key(b); });
    std::vector<T> out;
    for (const T& item : items) {
        if (!out.empty() && close(key(out.back()), key(item), kDupTol)) {
            if (!close(out.back().*price, item.*price, kDupTol)) {
                std::ostringstream os;
                os << "conflicting prices for duplicate " << noun << " " << key(item);
                fail(path, os.str());
            }
            continue; // equal duplicate, collapse
        }
        out.push_back(item);
    }
    items = std::move(out);
}

} // namespace

double MarketQuotes::max_strike() const {
    double m = 0.0;
    for (const auto& mat : maturities)
        for (const auto& c : mat.calls) m = std::max(m, c.strike);
    return m;
}

double MarketQuotes::max_barrier() const {
    double m = 0.0;
    for (const auto& mat : maturities)
        for (const auto& b : mat.barriers) m = std::max(m, b.level);
    return m;
}

MarketQuotes parse_quotes(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }

    MarketQuotes q;
    q.spot = want_number(want_member(doc, "spot", "$"), "$.spot");

    const json& mats = want_member(doc, "maturities", "$");
    if (!mats.is_array()) fail("$.maturities", "expected an array");

    for (std::size_t l = 0; l < mats.size(); ++l) {
        const std::string mpath = "$.maturities[" + std::to_string(l) + "]";
        const json& jm = mats[l];
        MaturityQuotes mq;
        mq.t = want_number(want_member(jm, "t", mpath), mpath + ".t");

        if (auto it = jm.find("calls"); it != jm.end()) {
            if (!it->is_array()) fail(mpath + ".calls", "expected an array");
            for (std::size_t i = 0; i < it->size(); ++i) {
                const std::string cpath = mpath + ".calls[" + std::to_string(i) + "]";
                const json& jc = (*it)[i];
                CallQuote c;
                c.strike = want_number(want_member(jc, "strike", cpath), cpath + ".strike");
                c.price = want_number(want_member(jc, "price", cpath), cpath + ".price");
                mq.calls.push_back(c);
            }
        }
        if (auto it = jm.find("barriers"); it != jm.end()) {
            if (!it->is_array()) fail(mpath + ".barriers", "expected an array");
            for (std::size_t i = 0; i < it->size(); ++i) {
                const std::string bpath = mpath + ".barriers[" + std::to_string(i) + "]";
                const json& jb = (*it)[i];
                BarrierQuote b;
                b.level = want_number(want_member(jb, "level", bpath), bpath + ".level");
                b.price = want_number(want_member(jb, "price", bpath), bpath + ".price");
                mq.barriers.push_back(b);
            }
        }
        sort_and_dedupe(mq.calls, [](const CallQuote& c) { return c.strike; },
                        &CallQuote::price, mpath + ".calls", "strike");
        sort_and_dedupe(mq.barriers, [](const BarrierQuote& b) { return b.level; },
                        &BarrierQuote::price, mpath + ".barriers", "level");
        q.maturities.push_back(std::move(mq));
    }

    std::stable_sort(q.maturities.begin(), q.maturities.end(),
                     [](const MaturityQuotes& a, const MaturityQuotes& b) { return a.t < b.t; });
    for (std::size_t l = 1; l < q.maturities.size(); ++l) {
        if (close(q.maturities[l - 1].t, q.maturities[l].t, kDupTol)) {
            std::ostringstream os;
            os << "duplicate maturity t = " << q.maturities[l].t;
            fail("$.maturities", os.str());
        }
    }

    if (auto it = doc.find("upper_bound"); it != doc.end()) {
        q.upper_bound = want_number(*it, "$.upper_bound");
    } else {
        double anchor = std::max(q.max_strike(), q.max_barrier());
        q.upper_bound = 2.0 * (anchor > 0.0 ? anchor : q.spot);
    }
    return q;
}

std::string serialize_quotes(const MarketQuotes& q) {
    JsonWriter w;
    w.begin_object();
    w.key("spot").value(q.spot);
    w.key("upper_bound").value(q.upper_bound);
    w.key("maturities").begin_array();
    for (const auto& m : q.maturities) {
        w.begin_object();
        w.key("t").value(m.t);
        w.key("calls").begin_array();
        for (const auto& c : m.calls) {
            w.begin_object();
            w.key("strike").value(c.strike);
            w.key("price").value(c.price);
            w.end_object();
        }
        w.end_array();
        w.key("barriers").begin_array();
        for (const auto& b : m.barriers) {
            w.begin_object();
            w.key("level").value(b.level);
            w.key("price").value(b.price);
            w.end_object();
        }
        w.end_array();
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.str();
}

bool ValidationReport::has_fatal() const {
    return std::any_of(violations.begin(), violations.end(),
                       [](const Violation& v) { return v.severity == Severity::Fatal; });
}

namespace {

void add(ValidationReport& r, std::string rule, int maturity, double location,
         std::string message) {
    r.violations.push_back(
        {std::move(rule), maturity, location, Severity::Fatal, std::move(message)});
}

std::string num(double v) { return fmt_g(v); }

} // namespace

ValidationReport validate(const MarketQuotes& q) {
    ValidationReport r;
    const double tol = 1e-9;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    if (!(q.spot > 0.0))
        add(r, "SPOT_POSITIVE", 0, nan, "spot must be positive, got " + num(q.spot));
    if (!(q.upper_bound > q.spot))
        add(r, "UPPER_BOUND", 0, nan,
            "upper_bound " + num(q.upper_bound) + " must exceed spot " + num(q.spot));
    if (q.maturities.empty())
        add(r, "NO_MATURITIES", 0, nan, "at least one maturity is required");

    for (std::size_t l = 0; l < q.maturities.size(); ++l) {
        const auto& m = q.maturities[l];
        const int ml = static_cast<int>(l) + 1;
        if (l > 0 && !(q.maturities[l - 1].t < m.t - tol))
            add(r, "MATURITY_ORDER", ml, m.t, "maturity times must be strictly increasing");

        for (std::size_t i = 0; i < m.calls.size(); ++i) {
            const auto& c = m.calls[i];
            if (!(c.strike >= 0.0))
                add(r, "CALL_INTRINSIC", ml, c.strike, "strike must be nonnegative");
            if (!(c.price > tol))
                add(r, "CALL_POSITIVE", ml, c.strike,
                    "call at strike " + num(c.strike) + " must have strictly positive price, got " +
                        num(c.price));
            if (c.price > q.spot + tol)
                add(r, "CALL_ABOVE_SPOT", ml, c.strike,
                    "call price " + num(c.price) + " exceeds spot " + num(q.spot));
            if (c.price < std::max(q.spot - c.strike, 0.0) - tol)
                add(r, "CALL_INTRINSIC", ml, c.strike,
                    "call price " + num(c.price) + " below intrinsic value " +
                        num(std::max(q.spot - c.strike, 0.0)));
            if (c.strike >= q.upper_bound - tol)
                add(r, "UPPER_BOUND", ml, c.strike,
                    "strike " + num(c.strike) + " must lie strictly below upper_bound " +
                        num(q.upper_bound));
            if (i > 0) {
                const auto& prev = m.calls[i - 1];
                const double dk = c.strike - prev.strike;
                if (!(c.price < prev.price - tol))
                    add(r, "CALL_MONOTONE", ml, c.strike,
                        "call prices must be strictly decreasing in strike");
                const double slope = (c.price - prev.price) / dk;
                if (slope < -1.0 - tol)
                    add(r, "CALL_SLOPE", ml, c.strike,
                        "call slope " + num(slope) + " between strikes " + num(prev.strike) +
                            " and " + num(c.strike) + " is below -1");
                if (i + 1 < m.calls.size()) {
                    const auto& next = m.calls[i + 1];
                    const double s2 = (next.price - c.price) / (next.strike - c.strike);
                    if (s2 < slope - tol)
                        add(r, "CALL_CONVEX", ml, c.strike,
                            "call prices are not convex in strike around " + num(c.strike));
                }
            } else {
                // slope from the forced point (0, spot)
                if (c.strike > 0.0) {
                    const double slope = (c.price - q.spot) / c.strike;
                    if (slope < -1.0 - tol)
                        add(r, "CALL_SLOPE", ml, c.strike,
                            "call slope " + num(slope) + " from (0, spot) is below -1");
                }
            }
        }

        for (std::size_t j = 0; j < m.barriers.size(); ++j) {
            const auto& b = m.barriers[j];
            if (b.price < -tol || b.price > 1.0 + tol)
                add(r, "BARRIER_RANGE", ml, b.level,
                    "one-touch price " + num(b.price) + " must lie in [0, 1]");
            if (!(b.level > q.spot + tol))
                add(r, "BARRIER_LEVEL", ml, b.level,
                    "barrier level " + num(b.level) + " must lie strictly above spot " +
                        num(q.spot));
            if (b.level > q.upper_bound + tol)
                add(r, "BARRIER_LEVEL", ml, b.level,
                    "barrier level " + num(b.level) + " must not exceed upper_bound " +
                        num(q.upper_bound));
            if (j > 0 && b.price > m.barriers[j - 1].price + tol)
                add(r, "BARRIER_MONOTONE", ml, b.level,
                    "one-touch prices must be nonincreasing in the barrier level");
        }
    }

    // calendar ordering across maturities
    for (std::size_t l = 1; l < q.maturities.size(); ++l) {
        const auto& prev = q.maturities[l - 1];
        const auto& cur = q.maturities[l];
        const int ml = static_cast<int>(l) + 1;
        for (const auto& c : cur.calls) {
            for (const auto& p : prev.calls) {
                if (close(p.strike, c.strike, kDupTol) && c.price < p.price - tol)
                    add(r, "CALL_CALENDAR", ml, c.strike,
                        "call at strike " + num(c.strike) +
                            " is cheaper than at the previous maturity");
            }
        }
        for (const auto& b : cur.barriers) {
            for (const auto& p : prev.barriers) {
                if (close(p.level, b.level, kDupTol) && b.price < p.price - tol)
                    add(r, "BARRIER_CALENDAR", ml, b.level,
                        "one-touch at level " + num(b.level) +
                            " is cheaper than at the previous maturity");
            }
        }
    }
    return r;
}

std::shared_ptr<const Grid> Grid::build(const MarketQuotes& q, int refine) {
    return build(q, refine, {});
}

std::shared_ptr<const Grid> Grid::build(const MarketQuotes& q, int refine,
                                        const std::vector<double>& extra_levels) {
    std::vector<double> base{0.0, q.spot, q.upper_bound};
    for (const auto& m : q.maturities) {
        for (const auto& c : m.calls) base.push_back(c.strike);
        for (const auto& b : m.barriers) base.push_back(b.level);
    }
    for (double x : extra_levels) base.push_back(x);
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end(),
                           [](double a, double b) { return close(a, b, kDupTol); }),
               base.end());
    if (base.front() < -kDupTol) throw std::invalid_argument("grid points must be nonnegative");
    base.front() = 0.0;
    if (base.back() > q.upper_bound + kDupTol)
        throw std::invalid_argument("grid point beyond upper_bound");

    const int parts = refine + 1;
    if (parts < 1) throw std::invalid_argument("refine must be >= 0");
    std::vector<double> pts;
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
        pts.push_back(base[i]);
        for (int s = 1; s < parts; ++s)
            pts.push_back(base[i] + (base[i + 1] - base[i]) * s / parts);
    }
    pts.push_back(base.back());
    return from_points(std::move(pts));
}

std::shared_ptr<const Grid> Grid::from_points(std::vector<double> points) {
    if (points.size() < 2) throw std::invalid_argument("grid needs at least two points");
    if (std::fabs(points.front()) > kDupTol)
        throw std::invalid_argument("grid must start at 0");
    points.front() = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i] > points[i - 1] + kDupTol))
            throw std::invalid_argument("grid points must be strictly increasing");
    return std::shared_ptr<const Grid>(new Grid(std::move(points)));
}

std::size_t Grid::index_of(double value) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), value - kNodeTol);
    if (it == points_.end() || std::fabs(*it - value) > kNodeTol) {
        std::ostringstream os;
        os << "value " << value << " is not a grid node";
        throw std::invalid_argument(os.str());
    }
    return static_cast<std::size_t>(it - points_.begin());
}

bool Grid::has_point(double value) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), value - kNodeTol);
    return it != points_.end() && std::fabs(*it - value) <= kNodeTol;
}

} // namespace maxcal
