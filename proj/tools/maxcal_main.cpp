#include "maxcal/json_io.hpp"
#include "maxcal/joint_law.hpp"
#include "maxcal/json_writer.hpp"
#include "maxcal/pricing.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalidQuotes = 2;
constexpr int kExitArbitrage = 3;
constexpr int kExitStalled = 4;

struct Options {
    std::string input;
    std::string out;
    int refine = 2;
    double upper_bound = 0.0;
    bool has_upper = false;
    std::size_t maturity = 1;
    double strike = 0.0;
    bool has_strike = false;
    double barrier = 0.0;
    bool has_barrier = false;
    std::string side = "max";
    double lambda = 1.0;
    std::string objective = "feasibility";
    double tol = 0.0;
    bool has_tol = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

maxcal::MarketQuotes load_quotes(const Options& opt) {
    maxcal::MarketQuotes q = maxcal::parse_quotes(slurp(opt.input));
    if (opt.has_upper) q.upper_bound = opt.upper_bound;
    return q;
}

maxcal::CalibrationConfig make_config(const Options& opt) {
    maxcal::CalibrationConfig cfg;
    cfg.refine = opt.refine;
    if (opt.objective == "regularize") cfg.objective = maxcal::Regularize{};
    if (opt.has_tol) {
        cfg.lp.tol_feas = opt.tol;
        cfg.lp.tol_gap = 10.0 * opt.tol;
    }
    return cfg;
}

// exit 2 path: report to stderr and optionally a file
int report_invalid(const maxcal::ValidationReport& r, const Options& opt) {
    const std::string json = maxcal::to_json(r);
    std::cerr << json << '\n';
    if (!opt.out.empty()) spill(opt.out, json + "\n");
    return kExitInvalidQuotes;
}

int emit_certificate(const maxcal::ArbitrageCertificate& cert, const Options& opt) {
    const std::string json = maxcal::to_json(cert);
    if (!opt.out.empty()) spill(opt.out, json + "\n");
    else std::cout << json << '\n';
    std::cerr << "arbitrage: market " << maxcal::fmt_g(cert.market_price) << " vs superreplication "
              << maxcal::fmt_g(cert.superrep_value) << " (gap " << maxcal::fmt_g(cert.gap)
              << ")\n";
    return kExitArbitrage;
}

int validate_or_exit(const maxcal::MarketQuotes& q, const Options& opt,
                     std::optional<int>& bail) {
    const maxcal::ValidationReport r = maxcal::validate(q);
    if (r.has_fatal()) {
        bail = report_invalid(r, opt);
        return 1;
    }
    return 0;
}

int cmd_check(const Options& opt) {
    const maxcal::MarketQuotes q = load_quotes(opt);
    const maxcal::ValidationReport r = maxcal::validate(q);
    if (r.has_fatal()) return report_invalid(r, opt);
    const std::string json = maxcal::to_json(r);
    std::cout << json << '\n';
    if (!opt.out.empty()) spill(opt.out, json + "\n");
    return kExitOk;
}

int cmd_calibrate(const Options& opt) {
    const maxcal::MarketQuotes q = load_quotes(opt);
    std::optional<int> bail;
    if (validate_or_exit(q, opt, bail)) return *bail;
    const maxcal::CalibrationOutcome outcome = maxcal::calibrate(q, make_config(opt));
    if (const auto* cert = std::get_if<maxcal::ArbitrageCertificate>(&outcome))
        return emit_certificate(*cert, opt);
    const std::string json = maxcal::to_json(std::get<maxcal::Decomposition>(outcome));
    if (!opt.out.empty()) spill(opt.out, json + "\n");
    else std::cout << json << '\n';
    return kExitOk;
}

int cmd_joint(const Options& opt) {
    const maxcal::MarketQuotes q = load_quotes(opt);
    std::optional<int> bail;
    if (validate_or_exit(q, opt, bail)) return *bail;
    const maxcal::CalibrationOutcome outcome = maxcal::calibrate(q, make_config(opt));
    if (const auto* cert = std::get_if<maxcal::ArbitrageCertificate>(&outcome))
        return emit_certificate(*cert, opt);
    const auto& d = std::get<maxcal::Decomposition>(outcome);
    const maxcal::JointPmf pmf = maxcal::band_pmf(d, opt.maturity);

    const std::filesystem::path base(opt.out);
    std::filesystem::path stem = base.parent_path() / base.stem();
    std::ostringstream pmf_csv, tails_csv;
    maxcal::write_pmf_csv(pmf_csv, pmf);
    maxcal::write_tails_csv(tails_csv, d, opt.maturity);
    spill(stem.string() + "_pmf.csv", pmf_csv.str());
    spill(stem.string() + "_tails.csv", tails_csv.str());
    return kExitOk;
}

int cmd_price(const Options& opt) {
    const maxcal::MarketQuotes q = load_quotes(opt);
    std::optional<int> bail;
    if (validate_or_exit(q, opt, bail)) return *bail;
    const maxcal::CalibrationOutcome outcome = maxcal::calibrate(q, make_config(opt));
    if (const auto* cert = std::get_if<maxcal::ArbitrageCertificate>(&outcome))
        return emit_certificate(*cert, opt);
    const auto& d = std::get<maxcal::Decomposition>(outcome);

    std::size_t j = 0;
    for (std::size_t jj = 1; jj <= d.level_count(); ++jj)
        if (std::fabs(d.levels[jj - 1] - opt.barrier) <= 1e-9) j = jj;
    if (j == 0) throw std::runtime_error("--barrier must name a quoted level");

    maxcal::JsonWriter w;
    w.begin_object();
    w.key("maturity").value_int(static_cast<long long>(opt.maturity));
    w.key("strike").value(opt.strike);
    w.key("barrier").value(opt.barrier);
    w.key("up_and_out_put").value(maxcal::up_and_out_put(d, opt.maturity, j, opt.strike));
    w.key("up_and_out_call").value(maxcal::up_and_out_call(d, opt.maturity, j, opt.strike));
    w.end_object();
    if (!opt.out.empty()) spill(opt.out, w.str() + "\n");
    else std::cout << w.str() << '\n';
    return kExitOk;
}

int cmd_bounds(const Options& opt) {
    const maxcal::MarketQuotes q = load_quotes(opt);
    std::optional<int> bail;
    if (validate_or_exit(q, opt, bail)) return *bail;
    const maxcal::Side side = opt.side == "min" ? maxcal::Side::Min : maxcal::Side::Max;
    const auto outcome =
        maxcal::robust_barrier_bounds(q, make_config(opt), opt.maturity, opt.barrier, side);
    if (const auto* cert = std::get_if<maxcal::ArbitrageCertificate>(&outcome))
        return emit_certificate(*cert, opt);
    const auto& bound = std::get<maxcal::BoundResult>(outcome);
    std::printf("%.12g\n", bound.value);
    if (!opt.out.empty()) spill(opt.out, maxcal::to_json(bound) + "\n");
    return kExitOk;
}

int cmd_vol(const Options& opt) {
    const maxcal::MarketQuotes q = load_quotes(opt);
    std::optional<int> bail;
    if (validate_or_exit(q, opt, bail)) return *bail;
    const maxcal::CalibrationOutcome outcome = maxcal::calibrate(q, make_config(opt));
    if (const auto* cert = std::get_if<maxcal::ArbitrageCertificate>(&outcome))
        return emit_certificate(*cert, opt);
    const auto& d = std::get<maxcal::Decomposition>(outcome);
    const maxcal::JointPmf pmf = maxcal::band_pmf(d, opt.maturity);
    const auto vol = maxcal::state_vol(pmf, opt.lambda);

    std::ostringstream csv;
    csv << "maturity,x,band_lo,band_hi,sigma2\n";
    for (std::size_t j = 1; j <= vol.size(); ++j) {
        const double lo = j == 1 ? pmf.spot : pmf.levels[j - 2];
        const double hi = pmf.levels[j - 1];
        for (std::size_t i = 0; i < vol[j - 1].size(); ++i) {
            if (std::isnan(vol[j - 1][i])) continue;
            csv << opt.maturity << ',' << maxcal::fmt_g((*pmf.grid)[i]) << ','
                << maxcal::fmt_g(lo) << ',' << maxcal::fmt_g(hi) << ','
                << maxcal::fmt_g(vol[j - 1][i]) << '\n';
        }
    }
    if (!opt.out.empty()) spill(opt.out, csv.str());
    else std::cout << csv.str();
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"joint calibration of call and one-touch quotes"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--input", opt.input, "quotes JSON file")->required();
        auto* o = sub->add_option("--out", opt.out, "output file path");
        if (needs_out) o->required();
        sub->add_option("--refine", opt.refine, "grid refinement level")
            ->default_val(2)
            ->check(CLI::Range(0, 8));
        sub->add_option("--upper-bound", opt.upper_bound, "override the support bound N")
            ->each([&](const std::string&) { opt.has_upper = true; });
        sub->add_option("--tol", opt.tol, "solver feasibility tolerance")
            ->each([&](const std::string&) { opt.has_tol = true; });
    };

    auto* c_check = app.add_subcommand("check", "validate quotes");
    add_common(c_check, false);

    auto* c_cal = app.add_subcommand("calibrate", "calibrate a decomposition");
    add_common(c_cal, false);
    c_cal->add_option("--objective", opt.objective, "LP objective")
        ->check(CLI::IsMember({"feasibility", "regularize"}));

    auto* c_joint = app.add_subcommand("joint", "export joint pmf and tail CSVs");
    add_common(c_joint, true);
    c_joint->add_option("--maturity", opt.maturity, "maturity index (1-based)")->default_val(1);
    c_joint->add_option("--objective", opt.objective, "LP objective")
        ->check(CLI::IsMember({"feasibility", "regularize"}));

    auto* c_price = app.add_subcommand("price", "price up-and-out options at a quoted level");
    add_common(c_price, false);
    c_price->add_option("--maturity", opt.maturity, "maturity index (1-based)")->default_val(1);
    c_price->add_option("--strike", opt.strike, "option strike")
        ->required()
        ->each([&](const std::string&) { opt.has_strike = true; });
    c_price->add_option("--barrier", opt.barrier, "quoted barrier level")
        ->required()
        ->each([&](const std::string&) { opt.has_barrier = true; });
    c_price->add_option("--objective", opt.objective, "LP objective")
        ->check(CLI::IsMember({"feasibility", "regularize"}));

    auto* c_bounds = app.add_subcommand("bounds", "robust one-touch bounds at an unquoted level");
    add_common(c_bounds, false);
    c_bounds->add_option("--maturity", opt.maturity, "maturity index (1-based)")->default_val(1);
    c_bounds->add_option("--barrier", opt.barrier, "barrier level")->required();
    c_bounds->add_option("--side", opt.side, "bound side")
        ->default_val("max")
        ->check(CLI::IsMember({"max", "min"}));

    auto* c_vol = app.add_subcommand("vol", "state-dependent volatility CSV");
    add_common(c_vol, false);
    c_vol->add_option("--maturity", opt.maturity, "maturity index (1-based)")->default_val(1);
    c_vol->add_option("--lambda", opt.lambda, "subordination rate")->default_val(1.0);
    c_vol->add_option("--objective", opt.objective, "LP objective")
        ->check(CLI::IsMember({"feasibility", "regularize"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(c_check)) return cmd_check(opt);
        if (app.got_subcommand(c_cal)) return cmd_calibrate(opt);
        if (app.got_subcommand(c_joint)) return cmd_joint(opt);
        if (app.got_subcommand(c_price)) return cmd_price(opt);
        if (app.got_subcommand(c_bounds)) return cmd_bounds(opt);
        if (app.got_subcommand(c_vol)) return cmd_vol(opt);
    } catch (const maxcal::SolverStalled& e) {
        std::cerr << "solver stalled: " << e.what() << '\n';
        return kExitStalled;
    } catch (const maxcal::ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
