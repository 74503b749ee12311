#include "ercav/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "ercav/config.hpp"
#include "ercav/error.hpp"
#include "ercav/estimators.hpp"
#include "ercav/g2.hpp"
#include "ercav/io.hpp"
#include "ercav/manifest.hpp"
#include "ercav/recipes.hpp"
#include "ercav/timetags.hpp"

namespace ercav::cli {
namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string trials;
    std::optional<unsigned> threads;
};

// Thrown for command-line misuse that CLI11 itself cannot detect.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t parse_count(const std::string& text, const char* what) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !(v >= 1.0) || v > 9.007199254740992e15 || std::floor(v) != v)
        throw UsageError(std::string(what) + ": expected a positive integer such as 5000000 or 5e6, got '" + text + "'");
    return static_cast<std::uint64_t>(v);
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

runio::RunConfig make_config(const Globals& g, const std::string& kind,
                             std::map<std::string, std::string>& env) {
    runio::RunConfig c = g.config.empty() ? runio::default_config() : runio::load_config(g.config);
    if (!c.task.kind.empty() && c.task.kind != kind)
        throw UsageError("config task.kind '" + c.task.kind + "' does not match the requested task '" + kind + "'");

    if (const char* e = std::getenv("ERCAV_OUT_DIR"); e && *e) {
        c.output_dir = e;
        env["ERCAV_OUT_DIR"] = e;
    }
    if (const char* e = std::getenv("ERCAV_THREADS"); e && *e) {
        c.threads = static_cast<unsigned>(parse_count(e, "ERCAV_THREADS"));
        env["ERCAV_THREADS"] = e;
    }
    if (g.seed) c.seed = *g.seed;
    if (!g.out.empty()) c.output_dir = g.out;
    if (!g.trials.empty()) c.task.trials = parse_count(g.trials, "--trials");
    if (g.threads) c.threads = *g.threads;
    c.threads = resolve_threads(c.threads);
    if (!c.seed) throw UsageError("no seed: pass --seed or set \"seed\" in the config");
    return c;
}

void print_result(const runio::RunResult& r, std::ostream& out) {
    for (const auto& line : r.summary) out << line << '\n';
    out << "wrote " << r.files.size() << " files and " << r.manifest.string() << '\n';
}

int run_sim(const Globals& g, const std::string& kind, std::ostream& out) {
    std::map<std::string, std::string> env;
    auto c = make_config(g, kind, env);
    c.task.kind = kind;
    runio::resolve_defaults(c);
    print_result(runio::execute(c, "sim " + kind, env), out);
    return kExitOk;
}

int run_report(const Globals& g, const std::string& figure, std::ostream& out) {
    std::map<std::string, std::string> env;
    auto c = make_config(g, figure, env);
    runio::apply_recipe(c, figure);
    print_result(runio::execute(c, "report " + figure, env), out);
    return kExitOk;
}

int run_fit(const std::string& kind, const std::string& input, int peaks, std::ostream& out) {
    const auto table = io::read_csv(std::filesystem::path(input));
    if (kind == "decay") {
        out << io::to_json(estimators::fit_exponential_decay(io::histogram_from_csv(table)));
    } else if (kind == "lorentzian") {
        if (peaks != 1 && peaks != 2) throw UsageError("--peaks must be 1 or 2");
        out << io::to_json(estimators::fit_lorentzian(io::scan_from_csv(table), peaks));
    } else {
        std::vector<estimators::PowerPoint> rate, width;
        for (const auto& p : io::saturation_from_csv(table)) {
            rate.push_back({p.power_w, p.p_det, p.p_det_err});
            width.push_back({p.power_w, p.fwhm_hz, p.fwhm_err_hz});
        }
        const auto r = estimators::fit_saturation_rate(rate);
        const auto l = estimators::fit_saturation_linewidth(width);
        out << "{\n\"rate\": " << io::to_json(r) << ",\n\"linewidth\": " << io::to_json(l) << "}\n";
    }
    return kExitOk;
}

int run_g2_estimate(const Globals& g, const std::string& input, std::size_t max_lag, const std::string& errors,
                    std::ostream& out) {
    if (g.config.empty()) throw UsageError("g2 estimate requires --config (timing and duty cycle of the run)");
    std::map<std::string, std::string> env;
    auto c = make_config(g, "g2", env);
    c.task.kind = "g2";

    runio::RunManifest m;
    m.start_time = runio::utc_now_iso8601();
    m.command = "g2 estimate";
    m.config_hash = runio::config_hash(c);
    m.seed = *c.seed;
    m.threads = c.threads;
    m.output_dir = c.output_dir.generic_string();
    m.env_overrides = env;

    auto stream = read_timetags(std::filesystem::path(input));
    estimators::G2Options opt;
    opt.max_lag = max_lag;
    opt.n_trials = g.trials.empty() ? 0 : c.task.trials;
    opt.errors = errors == "bootstrap" ? estimators::G2Errors::bootstrap : estimators::G2Errors::propagation;
    opt.normalization = c.task.g2_normalization == "far_lags" ? estimators::G2Normalization::far_lags
                                                               : estimators::G2Normalization::mean_square;
    opt.bootstrap_resamples = c.task.bootstrap_resamples;
    opt.bootstrap_seed = *c.seed;
    const auto g2 = estimators::g2_pulsed(stream, c.scenario.timing, opt);

    std::filesystem::create_directories(c.output_dir);
    std::ostringstream csv;
    io::write_g2_csv(g2, csv);
    io::write_file_atomic(c.output_dir / "g2.csv", csv.str());
    io::write_file_atomic(c.output_dir / "g2.json", io::to_json(g2));
    runio::record_outputs(m, {"g2.csv", "g2.json"});
    m.end_time = runio::utc_now_iso8601();
    const auto manifest = runio::write_manifest(m);

    char line[128];
    std::snprintf(line, sizeof line, "g2(0) = %.4f +- %.4f over %llu trials\n", g2.values[0], g2.errors[0],
                  static_cast<unsigned long long>(g2.n_trials));
    out << line << "wrote g2.csv, g2.json and " << manifest.string() << '\n';
    return kExitOk;
}

int run_verify(const std::string& manifest, std::ostream& out, std::ostream& err) {
    const auto report = runio::verify_manifest(manifest);
    if (report.ok) {
        out << "ok: all outputs match " << manifest << '\n';
        return kExitOk;
    }
    for (const auto& p : report.problems) err << p << '\n';
    return kExitUser;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Erbium nanoparticle fiber-cavity simulator and estimators", "ercav"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "JSON run configuration");
    app.add_option("--seed", g.seed, "Master seed (unsigned 64-bit)");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--trials", g.trials, "Trials per run or per scan point, e.g. 5e6");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");

    auto* sim = app.add_subcommand("sim", "Run a simulation");
    sim->require_subcommand(1);
    for (const char* k : {"microscopy", "decay", "scan", "saturation", "g2"}) sim->add_subcommand(k);

    auto* fit = app.add_subcommand("fit", "Fit a CSV produced by sim");
    fit->require_subcommand(1);
    std::string input;
    int peaks = 1;
    for (const char* k : {"decay", "lorentzian", "saturation"}) {
        auto* f = fit->add_subcommand(k);
        f->add_option("--input", input, "CSV input")->required();
        if (std::string(k) == "lorentzian") f->add_option("--peaks", peaks, "1 or 2");
    }

    auto* g2 = app.add_subcommand("g2", "Pulsed autocorrelation");
    g2->require_subcommand(1);
    auto* estimate = g2->add_subcommand("estimate", "Estimate g2 from an ETTS time-tag file");
    std::size_t max_lag = 50;
    std::string errors = "propagation";
    estimate->add_option("--input", input, "ETTS time-tag file")->required();
    estimate->add_option("--max-lag", max_lag, "Largest trial lag");
    estimate->add_option("--errors", errors, "propagation or bootstrap")
        ->check(CLI::IsMember({"propagation", "bootstrap"}));

    auto* report = app.add_subcommand("report", "Reproduce a reference figure end to end");
    report->require_subcommand(1);
    for (const char* k : {"figure2", "figure3", "figure4"}) report->add_subcommand(k);

    auto* verify = app.add_subcommand("verify", "Check output hashes against a manifest");
    std::string manifest;
    verify->add_option("--manifest", manifest, "manifest.json to check")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUser;
    }

    try {
        const auto chosen = [](CLI::App* parent) { return parent->get_subcommands().front()->get_name(); };
        if (sim->parsed()) return run_sim(g, chosen(sim), out);
        if (report->parsed()) return run_report(g, chosen(report), out);
        if (fit->parsed()) return run_fit(chosen(fit), input, peaks, out);
        if (estimate->parsed()) return run_g2_estimate(g, input, max_lag, errors, out);
        if (verify->parsed()) return run_verify(manifest, out, err);
        err << app.help();
        return kExitUser;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUser;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUser;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kExitUser;
    } catch (const std::invalid_argument& e) {
        // InvalidParameter and InputError
        err << "error: " << e.what() << '\n';
        return kExitUser;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"ercav"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ercav::cli
