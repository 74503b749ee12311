#include "ercav/recipes.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "ercav/cavity.hpp"
#include "ercav/error.hpp"
#include "ercav/estimators.hpp"
#include "ercav/g2.hpp"
#include "ercav/io.hpp"
#include "ercav/manifest.hpp"
#include "ercav/photodynamics.hpp"
#include "ercav/timetags.hpp"

namespace ercav::runio {
namespace {

using nlohmann::json;

// Sub-seeds for the panels of one report so they never share random numbers.
constexpr std::uint64_t kPanelTag = 0xF1C0'0000ULL;

// Branching ratio lower bound and the finesse reached with a particle in the mode.
constexpr double kBranchingRatio = 0.13;
constexpr double kLoadedFinesse = 20000.0;

json parse(const std::string& text) { return json::parse(text); }

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

class Writer {
public:
    Writer(std::filesystem::path dir, std::string prefix) : dir_(std::move(dir)), prefix_(std::move(prefix)) {}

    void text(const std::string& name, const std::string& content) {
        const auto file = prefix_ + name;
        io::write_file_atomic(dir_ / file, content);
        files_.push_back(file);
    }
    void json_doc(const std::string& name, const json& doc) { text(name, doc.dump(2) + "\n"); }
    void timetags(const std::string& name, const TimeTagStream& s) {
        std::ostringstream os(std::ios::binary);
        write_timetags(s, os);
        text(name, os.str());
    }

    std::vector<std::string>& files() { return files_; }
    std::vector<std::string> summary;

private:
    std::filesystem::path dir_;
    std::string prefix_;
    std::vector<std::string> files_;
};

std::uint64_t panel_seed(std::uint64_t seed, std::uint64_t panel) { return derive_seed(seed, kPanelTag, panel); }

void run_microscopy(const RunConfig& c, const photo::Scenario& s, Writer& w) {
    const auto map = cavity::microscopy_map(c.task.scatterers, s.cavity, c.task.grid);
    std::ostringstream csv;
    cavity::write_csv(map, csv);
    w.text("microscopy.csv", csv.str());

    const auto g = cavity::mode_geometry(s.cavity);
    const double q_loaded = g.q_factor * kLoadedFinesse / g.finesse;
    const double c_exp = cavity::purcell_factor(kBranchingRatio, s.cavity.wavelength_nm, q_loaded, g.mode_volume_um3);
    double t_min = 1.0, t_max = 0.0;
    for (double v : map.values) {
        t_min = std::min(t_min, v);
        t_max = std::max(t_max, v);
    }
    w.json_doc("cavity.json", {{"waist_um", g.waist_um},
                               {"mode_volume_um3", g.mode_volume_um3},
                               {"fsr_hz", g.fsr_hz},
                               {"finesse", g.finesse},
                               {"fwhm_hz", g.fwhm_hz},
                               {"q_factor", g.q_factor},
                               {"expected_purcell", {{"branching_ratio", kBranchingRatio},
                                                     {"loaded_finesse", kLoadedFinesse},
                                                     {"q_factor", q_loaded},
                                                     {"value", c_exp}}},
                               {"transmission_min", t_min},
                               {"transmission_max", t_max}});
    w.summary.push_back(fmt("waist %.3f um, V %.2f um^3, finesse %.0f", g.waist_um, g.mode_volume_um3, g.finesse));
    w.summary.push_back(fmt("cavity FWHM %.1f MHz, expected Purcell %.1f at zeta 0.13", g.fwhm_hz * 1e-6, c_exp));
}

void run_decay(const RunConfig& c, const photo::Scenario& s, std::uint64_t seed, Writer& w) {
    const auto stream = photo::run_sequence(s, c.task.trials, seed, c.threads);
    if (c.task.write_timetags) w.timetags("timetags.etts", stream);
    const auto hist = photo::decay_histogram(stream, c.task.bin_us, s.timing.window_us);
    std::ostringstream csv;
    io::write_histogram_csv(hist, csv);
    w.text("decay.csv", csv.str());

    const auto fit = estimators::fit_exponential_decay(hist);
    const double expected_us = cavity::purcell_lifetime(s.natural_lifetime_s, s.purcell_peak) * 1e6;
    const double purcell = cavity::purcell_from_lifetimes(s.natural_lifetime_s, fit.lifetime_us * 1e-6);
    json doc = parse(io::to_json(fit));
    doc["detected_photons"] = stream.records.size();
    doc["optimal_lifetime_us"] = expected_us;
    doc["purcell_from_lifetime"] = purcell;
    w.json_doc("decay_fit.json", doc);
    w.summary.push_back(fmt("decay: %.0f photons, lifetime %.2f +- %.2f us", static_cast<double>(stream.records.size()),
                            fit.lifetime_us, fit.lifetime_err_us));
}

void run_scan(const RunConfig& c, const photo::Scenario& s, std::uint64_t seed, Writer& w, const std::string& name) {
    const auto grid = photo::linear_grid(s.excitation_freq_hz, c.task.half_span_hz, c.task.points);
    const auto scan = photo::scan_excitation(s, grid, c.task.trials, seed, c.threads);
    std::ostringstream csv;
    io::write_scan_csv(scan, csv);
    w.text(name + ".csv", csv.str());

    if (c.particle_source == ParticleSource::sampled) {
        const auto fit = estimators::fit_gaussian_envelope(scan);
        const double n_ions = static_cast<double>(s.particle.ions.size());
        const double peak_density = ensemble::spectral_density(s.particle, c.particle_spec, c.particle_spec.inhom_center_hz);
        w.json_doc(name + "_fit.json", {{"fit", parse(io::to_json(fit))},
                                        {"envelope_fwhm_hz", fit.value("fwhm")},
                                        {"envelope_fwhm_err_hz", fit.error("fwhm")},
                                        {"particle_diameter_nm", s.particle.diameter_nm},
                                        {"ions", n_ions},
                                        {"peak_density_per_ghz", peak_density}});
        w.summary.push_back(fmt("envelope FWHM %.3f +- %.3f GHz over %.0f ions", fit.value("fwhm") * 1e-9,
                                fit.error("fwhm") * 1e-9, n_ions));
        return;
    }
    const auto fit = estimators::fit_lorentzian(scan, c.task.n_peaks);
    w.text(name + "_fit.json", io::to_json(fit));
    if (c.task.n_peaks == 2) {
        w.summary.push_back(name + fmt(": splitting %.3f +- %.3f MHz", fit.splitting * 1e-6, fit.splitting_err * 1e-6));
    } else {
        w.summary.push_back(name + fmt(": FWHM %.3f +- %.3f MHz", fit.fwhms[0] * 1e-6, fit.fwhms_err[0] * 1e-6));
    }
}

void run_saturation(const RunConfig& c, const photo::Scenario& s, std::uint64_t seed, Writer& w) {
    photo::SaturationOptions opt;
    opt.points_per_scan = c.task.points;
    opt.threads = c.threads;
    const auto series = photo::saturation_series(s, c.task.powers_w, c.task.trials, seed, opt);
    std::ostringstream csv;
    io::write_saturation_csv(series, csv);
    w.text("saturation.csv", csv.str());

    std::vector<estimators::PowerPoint> rate, width;
    for (const auto& p : series) {
        rate.push_back({p.power_w, p.p_det, p.p_det_err});
        width.push_back({p.power_w, p.fwhm_hz, p.fwhm_err_hz});
    }
    const auto r = estimators::fit_saturation_rate(rate);
    const auto l = estimators::fit_saturation_linewidth(width);
    w.json_doc("saturation_fit.json", {{"rate", parse(io::to_json(r))},
                                       {"linewidth", parse(io::to_json(l))},
                                       {"intracavity_photons_at_p_sat", photo::intracavity_photons(s, s.p_sat_w)}});
    const char* flag = " (degenerate fit)";
    w.summary.push_back(fmt("P_sat %.2f +- %.2f pW, p_max %.4f", r.p_sat_w * 1e12, r.p_sat_err_w * 1e12, r.p_max) +
                        (r.degenerate ? flag : ""));
    w.summary.push_back(fmt("linewidth0 %.3f +- %.3f MHz, P_sat %.2f pW", l.linewidth0_hz * 1e-6,
                            l.linewidth0_err_hz * 1e-6, l.p_sat_w * 1e12) +
                        (l.degenerate ? flag : ""));
}

void run_g2(const RunConfig& c, const photo::Scenario& s, std::uint64_t seed, Writer& w) {
    const auto stream = photo::run_sequence(s, c.task.trials, seed, c.threads);
    if (c.task.write_timetags) w.timetags("timetags.etts", stream);

    estimators::G2Options opt;
    opt.max_lag = c.task.max_lag;
    opt.errors = c.task.g2_errors == "bootstrap" ? estimators::G2Errors::bootstrap : estimators::G2Errors::propagation;
    opt.normalization = c.task.g2_normalization == "far_lags" ? estimators::G2Normalization::far_lags
                                                               : estimators::G2Normalization::mean_square;
    opt.bootstrap_resamples = c.task.bootstrap_resamples;
    opt.bootstrap_seed = seed;
    const auto g2 = estimators::g2_pulsed(stream, s.timing, opt);

    std::ostringstream csv;
    io::write_g2_csv(g2, csv);
    w.text("g2.csv", csv.str());

    const photo::TrialEngine engine(s);
    const double p_signal = engine.expected_signal_probability();
    const double mu_dark = engine.expected_dark_counts();
    const double predicted = estimators::g2_background_prediction(p_signal, mu_dark);
    json doc = parse(io::to_json(g2));
    doc["prediction"] = {{"p_signal", p_signal}, {"mu_dark", mu_dark}, {"g2_zero", predicted}};
    doc["detected_photons"] = stream.records.size();
    doc["kept_trials"] = stream.kept_trials;
    w.json_doc("g2.json", doc);
    w.summary.push_back(fmt("g2(0) = %.3f +- %.3f (prediction %.3f)", g2.values[0], g2.errors[0], predicted));
}

}  // namespace

void apply_recipe(RunConfig& c, const std::string& figure) {
    if (figure == "figure2") {
        c.task.kind = "figure2";
    } else if (figure == "figure3") {
        c.task.kind = "figure3";
    } else if (figure == "figure4") {
        c.task.kind = "figure4";
        apply_preset(c, "g2-paper");
        c.scenario.excitation_power_w = kFigure4PowerW;
    } else {
        throw ConfigError("report: unknown recipe '" + figure + "', expected figure2, figure3 or figure4");
    }
    c.particle_source = ParticleSource::reference_ion;
    c.excitation_detuning_hz = 0.0;
    resolve_defaults(c);
}

RunResult execute(const RunConfig& config, const std::string& command,
                  const std::map<std::string, std::string>& env_overrides) {
    validate(config);
    RunManifest manifest;
    manifest.start_time = utc_now_iso8601();
    manifest.command = command;
    manifest.config_hash = config_hash(config);
    manifest.seed = *config.seed;
    manifest.threads = config.threads;
    manifest.output_dir = config.output_dir.generic_string();
    manifest.env_overrides = env_overrides;

    std::filesystem::create_directories(config.output_dir);
    Writer w(config.output_dir, "");
    w.text("config.json", to_json(config, false));

    const std::uint64_t seed = *config.seed;
    const auto& kind = config.task.kind;
    if (kind == "microscopy") {
        run_microscopy(config, build_scenario(config), w);
    } else if (kind == "decay") {
        run_decay(config, build_scenario(config), seed, w);
    } else if (kind == "scan") {
        run_scan(config, build_scenario(config), seed, w, "scan");
    } else if (kind == "saturation") {
        run_saturation(config, build_scenario(config), seed, w);
    } else if (kind == "g2" || kind == "figure4") {
        run_g2(config, build_scenario(config), seed, w);
    } else if (kind == "figure2") {
        // (a) microscopy, (b) decay of the reference ion, (c) wide scan of a 170 nm particle.
        RunConfig a = config;
        a.task.kind = "microscopy";
        resolve_defaults(a);
        run_microscopy(a, build_scenario(a), w);

        RunConfig b = config;
        b.task.kind = "decay";
        run_decay(b, build_scenario(b), panel_seed(seed, 1), w);

        RunConfig c = config;
        c.task = TaskConfig{};
        c.task.kind = "scan";
        c.particle_source = ParticleSource::sampled;
        c.particle_spec.diameter_mean_nm = ensemble::kReferenceDiameterNm;
        c.particle_spec.diameter_sd_nm = 0.0;
        resolve_defaults(c);
        run_scan(c, build_scenario(c), panel_seed(seed, 2), w, "envelope");
    } else if (kind == "figure3") {
        // (a) Zeeman-split line, (b) scan at 22 pW, (c) saturation series.
        RunConfig a = config;
        a.scenario.b_field_mt = kFigure3FieldMt;
        a.task.kind = "scan";
        a.task.n_peaks = 0;
        a.task.points = 0;
        a.task.half_span_hz = 0.0;
        resolve_defaults(a);
        run_scan(a, build_scenario(a), panel_seed(seed, 1), w, "zeeman_scan");

        RunConfig b = config;
        b.scenario.excitation_power_w = 22e-12;
        b.task.kind = "scan";
        b.task.n_peaks = 1;
        b.task.points = 0;
        b.task.half_span_hz = 0.0;
        resolve_defaults(b);
        run_scan(b, build_scenario(b), panel_seed(seed, 2), w, "scan_22pW");

        RunConfig c = config;
        c.task.kind = "saturation";
        c.task.points = 0;
        resolve_defaults(c);
        run_saturation(c, build_scenario(c), panel_seed(seed, 3), w);
    } else {
        throw ConfigError("task.kind: unknown task '" + kind + "'");
    }

    record_outputs(manifest, w.files());
    manifest.end_time = utc_now_iso8601();
    RunResult result;
    result.manifest = write_manifest(manifest);
    result.files = w.files();
    result.summary = w.summary;
    return result;
}

}  // namespace ercav::runio
