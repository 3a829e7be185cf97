#include "maxcal/json_io.hpp"

#include "maxcal/json_writer.hpp"

#include <json.hpp>

#include <cmath>

namespace maxcal {

namespace {

void write_doubles(JsonWriter& w, const std::vector<double>& v) {
    w.begin_array();
    for (double x : v) w.value(x);
    w.end_array();
}

} // namespace

std::string to_json(const ValidationReport& r) {
    JsonWriter w;
    w.begin_object();
    w.key("ok").value(r.ok());
    w.key("violations").begin_array();
    for (const auto& v : r.violations) {
        w.begin_object();
        w.key("rule").value(v.rule);
        w.key("maturity").value_int(v.maturity);
        if (std::isnan(v.location)) w.key("location").null();
        else w.key("location").value(v.location);
        w.key("severity").value(v.severity == Severity::Fatal ? "fatal" : "warning");
        w.key("message").value(v.message);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    return w.str();
}

std::string to_json(const Decomposition& d) {
    JsonWriter w;
    w.begin_object();
    w.key("grid");
    write_doubles(w, d.grid->points());
    w.key("levels");
    write_doubles(w, d.levels);
    w.key("touch").begin_array();
    for (const auto& t : d.touch) write_doubles(w, t);
    w.end_array();
    w.key("u").begin_array();
    for (const auto& f : d.u) write_doubles(w, f.values());
    w.end_array();
    w.key("blocks").begin_array();
    for (std::size_t l = 1; l <= d.maturity_count(); ++l) {
        for (std::size_t j = 1; j <= d.level_count(); ++j) {
            w.begin_object();
            w.key("maturity").value_int(static_cast<long long>(l));
            w.key("level_index").value_int(static_cast<long long>(j));
            w.key("level").value(d.levels[j - 1]);
            w.key("values");
            write_doubles(w, d.blocks[l - 1][j - 1].values());
            w.end_object();
        }
    }
    w.end_array();
    w.key("quotes").raw(serialize_quotes(d.quotes));
    w.key("meta").begin_object();
    w.key("objective").value(d.meta.objective);
    w.key("iterations").value_int(d.meta.iterations);
    w.key("tol_feas").value(d.meta.tol_feas);
    w.end_object();
    w.end_object();
    return w.str();
}

std::string to_json(const ArbitrageCertificate& c) {
    JsonWriter w;
    w.begin_object();
    w.key("lambdas").begin_array();
    for (const auto& e : c.lambdas) {
        w.begin_object();
        w.key("type").value(e.kind == LambdaEntry::Kind::Call ? "call" : "digital");
        w.key("maturity").value_int(static_cast<long long>(e.maturity));
        w.key("strike_or_level").value(e.strike_or_level);
        w.key("weight").value(e.weight);
        w.end_object();
    }
    w.end_array();
    w.key("market_price").value(c.market_price);
    w.key("superrep_value").value(c.superrep_value);
    w.key("gap").value(c.gap);
    w.key("grid_certificate").value(c.grid_certificate);
    w.key("confirmed").value(c.confirmed);
    w.end_object();
    return w.str();
}

std::string to_json(const BoundResult& b) {
    JsonWriter w;
    w.begin_object();
    w.key("side").value(b.side == Side::Max ? "max" : "min");
    w.key("value").value(b.value);
    w.key("dual_prices").begin_array();
    for (const auto& dp : b.dual_prices) {
        w.begin_object();
        w.key("type").value(dp.kind == PinInfo::Kind::Call ? "call" : "digital");
        w.key("maturity").value_int(static_cast<long long>(dp.maturity));
        w.key("strike_or_level").value(dp.strike_or_level);
        w.key("dual").value(dp.dual);
        w.end_object();
    }
    w.end_array();
    w.key("achieved_by").raw(to_json(b.achieved_by));
    w.end_object();
    return w.str();
}

ArbitrageCertificate certificate_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("certificate JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("lambdas") || !j["lambdas"].is_array())
        throw ParseError("certificate JSON: missing lambdas array");

    ArbitrageCertificate c;
    for (const auto& e : j["lambdas"]) {
        if (!e.is_object() || !e.contains("type") || !e.contains("maturity") ||
            !e.contains("strike_or_level") || !e.contains("weight"))
            throw ParseError("certificate JSON: malformed lambda entry");
        LambdaEntry le;
        const std::string type = e["type"].get<std::string>();
        if (type == "call") le.kind = LambdaEntry::Kind::Call;
        else if (type == "digital") le.kind = LambdaEntry::Kind::Digital;
        else throw ParseError("certificate JSON: lambda type must be call or digital");
        if (!e["maturity"].is_number_unsigned() || e["maturity"].get<long long>() < 1)
            throw ParseError("certificate JSON: maturity must be a positive integer");
        le.maturity = e["maturity"].get<std::size_t>();
        if (!e["strike_or_level"].is_number() || !e["weight"].is_number())
            throw ParseError("certificate JSON: numeric fields expected");
        le.strike_or_level = e["strike_or_level"].get<double>();
        le.weight = e["weight"].get<double>();
        c.lambdas.push_back(le);
    }
    auto num = [&](const char* k) {
        if (!j.contains(k) || !j[k].is_number())
            throw ParseError(std::string("certificate JSON: missing number ") + k);
        return j[k].get<double>();
    };
    c.market_price = num("market_price");
    c.superrep_value = num("superrep_value");
    c.gap = num("gap");
    c.grid_certificate = j.value("grid_certificate", true);
    c.confirmed = j.value("confirmed", false);
    return c;
}

} // namespace maxcal
