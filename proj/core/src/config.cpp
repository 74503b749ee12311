#include "ercav/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "ercav/error.hpp"
#include "ercav/io.hpp"
#include "ercav/manifest.hpp"

namespace ercav::runio {
namespace {

using nlohmann::json;

constexpr std::uint64_t kParticleTag = 0x9A27'1C1EULL;

const std::set<std::string> kTaskKinds = {"microscopy", "decay",   "scan",    "saturation",
                                          "g2",         "figure2", "figure3", "figure4"};

// Reads optional keys from one JSON object and rejects anything it was not asked about.
class Section {
public:
    Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    [[nodiscard]] std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    bool has(const std::string& key) {
        known_.insert(key);
        return obj_.contains(key);
    }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto& v = obj_.at(key);
        if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) throw ConfigError(field(key) + ": must be finite");
    }

    template <typename T>
    void integer(const std::string& key, T& out) {
        if (!has(key)) return;
        const auto& v = obj_.at(key);
        // Accept 5e6 style floats as long as they are integral.
        if (v.is_number_unsigned()) {
            out = static_cast<T>(v.get<std::uint64_t>());
        } else if (v.is_number_float() && v.get<double>() >= 0.0 && std::floor(v.get<double>()) == v.get<double>()) {
            out = static_cast<T>(v.get<double>());
        } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            out = static_cast<T>(v.get<std::int64_t>());
        } else {
            throw ConfigError(field(key) + ": expected a nonnegative integer");
        }
    }

    void signed_integer(const std::string& key, int& out) {
        if (!has(key)) return;
        if (!obj_.at(key).is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
        out = obj_.at(key).get<int>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        if (!obj_.at(key).is_string()) throw ConfigError(field(key) + ": expected a string");
        out = obj_.at(key).get<std::string>();
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        if (!obj_.at(key).is_boolean()) throw ConfigError(field(key) + ": expected true or false");
        out = obj_.at(key).get<bool>();
    }

    std::optional<Section> child(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return Section(obj_.at(key), field(key));
    }

    const json& raw(const std::string& key) {
        known_.insert(key);
        return obj_.at(key);
    }

    void finish() const {
        for (const auto& [key, _] : obj_.items())
            if (!known_.count(key)) throw ConfigError(field(key) + ": unknown key");
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> known_;
};

ParticleSource parse_source(const std::string& s, const std::string& field) {
    if (s == "reference_ion") return ParticleSource::reference_ion;
    if (s == "sampled") return ParticleSource::sampled;
    if (s == "file") return ParticleSource::file;
    throw ConfigError(field + ": expected reference_ion, sampled or file, got '" + s + "'");
}

void read_cavity(Section s, cavity::CavityParams& c) {
    s.number("roc_um", c.roc_um);
    s.number("length_um", c.length_um);
    s.number("wavelength_nm", c.wavelength_nm);
    s.number("t_fiber_ppm", c.t_fiber_ppm);
    s.number("t_flat_ppm", c.t_flat_ppm);
    s.number("loss_ppm", c.loss_ppm);
    s.number("antinode_offset_nm", c.antinode_offset_nm);
    s.finish();
}

void read_spec(Section s, ensemble::ParticleSpec& p) {
    s.number("diameter_mean_nm", p.diameter_mean_nm);
    s.number("diameter_sd_nm", p.diameter_sd_nm);
    s.number("ion_density_per_um3", p.ion_density_per_um3);
    s.number("c2_fraction", p.c2_fraction);
    s.number("inhom_center_hz", p.inhom_center_hz);
    s.number("inhom_fwhm_hz", p.inhom_fwhm_hz);
    s.number("homwidth_base_hz", p.homwidth_base_hz);
    s.number("homwidth_surface_hz", p.homwidth_surface_hz);
    s.number("surface_layer_nm", p.surface_layer_nm);
    s.number("sd_sigma_hz", p.sd_sigma_hz);
    s.number("sd_tau_s", p.sd_tau_s);
    s.number("zeeman_slope_hz_per_mt", p.zeeman_slope_hz_per_mt);
    s.finish();
}

void read_particle(Section s, RunConfig& c, const std::filesystem::path& base_dir) {
    std::string source = to_string(c.particle_source);
    s.string("source", source);
    c.particle_source = parse_source(source, s.field("source"));
    if (auto r = s.child("reference")) {
        r->number("hom_fwhm_hz", c.reference_hom_fwhm_hz);
        r->number("center_freq_hz", c.reference_center_freq_hz);
        r->finish();
    }
    if (auto spec = s.child("spec")) read_spec(*spec, c.particle_spec);
    std::string file;
    s.string("file", file);
    if (!file.empty()) {
        std::filesystem::path p(file);
        c.ensemble_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    s.finish();
}

void read_timing(Section s, photo::ProtocolTiming& t) {
    s.number("pulse_us", t.pulse_us);
    s.number("window_us", t.window_us);
    s.number("rep_rate_hz", t.rep_rate_hz);
    s.number("duty_cycle", t.duty_cycle);
    s.finish();
}

void read_chain(Section s, photo::DetectionChain& d) {
    s.number("escape_efficiency", d.escape_efficiency);
    s.number("mode_match", d.mode_match);
    s.number("path_efficiency", d.path_efficiency);
    s.number("detector_efficiency", d.detector_efficiency);
    s.number("dark_rate_hz", d.dark_rate_hz);
    s.number("dead_time_ns", d.dead_time_ns);
    s.finish();
}

void read_scenario(Section s, RunConfig& c, const std::filesystem::path& base_dir) {
    auto& sc = c.scenario;
    if (auto x = s.child("cavity")) read_cavity(*x, sc.cavity);
    if (auto x = s.child("particle")) read_particle(*x, c, base_dir);
    if (auto x = s.child("timing")) read_timing(*x, sc.timing);
    if (auto x = s.child("chain")) read_chain(*x, sc.chain);
    if (auto x = s.child("excitation")) {
        x->number("power_w", sc.excitation_power_w);
        x->number("detuning_hz", c.excitation_detuning_hz);
        x->number("p_sat_w", sc.p_sat_w);
        x->number("b_field_mt", sc.b_field_mt);
        x->finish();
    }
    s.number("natural_lifetime_s", sc.natural_lifetime_s);
    s.number("purcell_peak", sc.purcell_peak);
    s.number("zeeman_narrowing", sc.zeeman_narrowing);
    s.finish();
}

void read_task(Section s, TaskConfig& t) {
    s.string("kind", t.kind);
    s.integer("trials", t.trials);
    s.number("half_span_hz", t.half_span_hz);
    s.integer("points", t.points);
    s.signed_integer("n_peaks", t.n_peaks);
    if (s.has("powers_w")) {
        const auto& arr = s.raw("powers_w");
        if (!arr.is_array()) throw ConfigError(s.field("powers_w") + ": expected an array of numbers");
        t.powers_w.clear();
        for (const auto& v : arr) {
            if (!v.is_number()) throw ConfigError(s.field("powers_w") + ": expected an array of numbers");
            t.powers_w.push_back(v.get<double>());
        }
    }
    s.number("bin_us", t.bin_us);
    s.integer("max_lag", t.max_lag);
    s.string("g2_errors", t.g2_errors);
    s.string("g2_normalization", t.g2_normalization);
    s.integer("bootstrap_resamples", t.bootstrap_resamples);
    s.boolean("write_timetags", t.write_timetags);
    if (auto g = s.child("grid")) {
        g->number("x_min_um", t.grid.x_min_um);
        g->number("x_max_um", t.grid.x_max_um);
        g->number("y_min_um", t.grid.y_min_um);
        g->number("y_max_um", t.grid.y_max_um);
        g->number("step_um", t.grid.step_um);
        g->finish();
    }
    if (s.has("scatterers")) {
        const auto& arr = s.raw("scatterers");
        if (!arr.is_array()) throw ConfigError(s.field("scatterers") + ": expected an array");
        t.scatterers.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section e(arr[i], s.field("scatterers") + "[" + std::to_string(i) + "]");
            cavity::Scatterer sc;
            e.number("x_um", sc.x_um);
            e.number("y_um", sc.y_um);
            e.number("loss_ppm", sc.loss_ppm);
            e.finish();
            t.scatterers.push_back(sc);
        }
    }
    s.finish();
}

template <typename F>
void wrap(const std::string& field, F&& f) {
    try {
        f();
    } catch (const InvalidParameter& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

json config_json(const RunConfig& c, bool with_runtime) {
    const auto& sc = c.scenario;
    const auto& p = c.particle_spec;
    json particle = {{"source", to_string(c.particle_source)},
                     {"reference", {{"hom_fwhm_hz", c.reference_hom_fwhm_hz},
                                    {"center_freq_hz", c.reference_center_freq_hz}}},
                     {"spec", {{"diameter_mean_nm", p.diameter_mean_nm},
                               {"diameter_sd_nm", p.diameter_sd_nm},
                               {"ion_density_per_um3", p.ion_density_per_um3},
                               {"c2_fraction", p.c2_fraction},
                               {"inhom_center_hz", p.inhom_center_hz},
                               {"inhom_fwhm_hz", p.inhom_fwhm_hz},
                               {"homwidth_base_hz", p.homwidth_base_hz},
                               {"homwidth_surface_hz", p.homwidth_surface_hz},
                               {"surface_layer_nm", p.surface_layer_nm},
                               {"sd_sigma_hz", p.sd_sigma_hz},
                               {"sd_tau_s", p.sd_tau_s},
                               {"zeeman_slope_hz_per_mt", p.zeeman_slope_hz_per_mt}}}};
    if (!c.ensemble_file.empty()) particle["file"] = c.ensemble_file.generic_string();

    json scenario = {
        {"cavity", {{"roc_um", sc.cavity.roc_um},
                    {"length_um", sc.cavity.length_um},
                    {"wavelength_nm", sc.cavity.wavelength_nm},
                    {"t_fiber_ppm", sc.cavity.t_fiber_ppm},
                    {"t_flat_ppm", sc.cavity.t_flat_ppm},
                    {"loss_ppm", sc.cavity.loss_ppm},
                    {"antinode_offset_nm", sc.cavity.antinode_offset_nm}}},
        {"particle", particle},
        {"timing", {{"pulse_us", sc.timing.pulse_us},
                    {"window_us", sc.timing.window_us},
                    {"rep_rate_hz", sc.timing.rep_rate_hz},
                    {"duty_cycle", sc.timing.duty_cycle}}},
        {"chain", {{"escape_efficiency", sc.chain.escape_efficiency},
                   {"mode_match", sc.chain.mode_match},
                   {"path_efficiency", sc.chain.path_efficiency},
                   {"detector_efficiency", sc.chain.detector_efficiency},
                   {"dark_rate_hz", sc.chain.dark_rate_hz},
                   {"dead_time_ns", sc.chain.dead_time_ns}}},
        {"excitation", {{"power_w", sc.excitation_power_w},
                        {"detuning_hz", c.excitation_detuning_hz},
                        {"p_sat_w", sc.p_sat_w},
                        {"b_field_mt", sc.b_field_mt}}},
        {"natural_lifetime_s", sc.natural_lifetime_s},
        {"purcell_peak", sc.purcell_peak},
        {"zeeman_narrowing", sc.zeeman_narrowing}};

    const auto& t = c.task;
    json scatterers = json::array();
    for (const auto& s : t.scatterers) scatterers.push_back({{"x_um", s.x_um}, {"y_um", s.y_um}, {"loss_ppm", s.loss_ppm}});
    json task = {{"kind", t.kind},
                 {"trials", t.trials},
                 {"half_span_hz", t.half_span_hz},
                 {"points", t.points},
                 {"n_peaks", t.n_peaks},
                 {"powers_w", t.powers_w},
                 {"bin_us", t.bin_us},
                 {"max_lag", t.max_lag},
                 {"g2_errors", t.g2_errors},
                 {"g2_normalization", t.g2_normalization},
                 {"bootstrap_resamples", t.bootstrap_resamples},
                 {"write_timetags", t.write_timetags},
                 {"grid", {{"x_min_um", t.grid.x_min_um},
                           {"x_max_um", t.grid.x_max_um},
                           {"y_min_um", t.grid.y_min_um},
                           {"y_max_um", t.grid.y_max_um},
                           {"step_um", t.grid.step_um}}},
                 {"scatterers", scatterers}};

    json doc = {{"version", c.version}, {"preset", c.preset}, {"scenario", scenario}, {"task", task}};
    if (c.seed) doc["seed"] = *c.seed;
    if (with_runtime) {
        doc["output_dir"] = c.output_dir.generic_string();
        doc["threads"] = c.threads;
    }
    return doc;
}

}  // namespace

std::string to_string(ParticleSource source) {
    switch (source) {
        case ParticleSource::reference_ion: return "reference_ion";
        case ParticleSource::sampled: return "sampled";
        case ParticleSource::file: return "file";
    }
    return "?";
}

void apply_preset(RunConfig& c, const std::string& preset) {
    photo::DetectionChain base;
    if (preset == "default") {
        base = photo::DetectionChain::default_preset();
    } else if (preset == "g2-paper") {
        base = photo::DetectionChain::g2_preset();
    } else {
        throw ConfigError("preset: expected default or g2-paper, got '" + preset + "'");
    }
    c.preset = preset;
    c.scenario.chain.detector_efficiency = base.detector_efficiency;
    c.scenario.chain.dark_rate_hz = base.dark_rate_hz;
}

RunConfig default_config() {
    RunConfig c;
    c.scenario = photo::reference_scenario();
    c.scenario.particle = {};
    c.scenario.excitation_freq_hz = 0.0;
    apply_preset(c, "default");
    return c;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c = default_config();
    Section top(doc, "");
    top.signed_integer("version", c.version);
    if (c.version != kConfigVersion)
        throw ConfigError("version: unsupported config version " + std::to_string(c.version));
    std::string preset = c.preset;
    top.string("preset", preset);
    apply_preset(c, preset);
    if (top.has("seed")) {
        std::uint64_t seed = 0;
        top.integer("seed", seed);
        c.seed = seed;
    }
    std::string out_dir = c.output_dir.generic_string();
    top.string("output_dir", out_dir);
    c.output_dir = out_dir;
    top.integer("threads", c.threads);
    if (auto s = top.child("scenario")) read_scenario(*s, c, base_dir);
    if (auto t = top.child("task")) read_task(*t, c.task);
    top.finish();

    c.scenario.inhom_fwhm_hz = c.particle_spec.inhom_fwhm_hz;
    resolve_defaults(c);
    validate_fields(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const InputError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(text, path.parent_path());
}

void resolve_defaults(RunConfig& c) {
    auto& t = c.task;
    const std::string& k = t.kind;
    if (t.trials == 0) {
        if (k == "decay" || k == "figure2") t.trials = 20'000'000;
        else if (k == "scan" && c.particle_source == ParticleSource::sampled) t.trials = 2'000;
        else if (k == "scan") t.trials = 20'000;
        else if (k == "saturation" || k == "figure3") t.trials = 200'000;
        else if (k == "g2" || k == "figure4") t.trials = 5'000'000;
    }
    if (k == "scan" && c.particle_source == ParticleSource::sampled) {
        // Wide scan over the inhomogeneous line.
        if (t.n_peaks == 0) t.n_peaks = 1;
        if (t.points == 0) t.points = 1001;
        if (t.half_span_hz == 0.0) t.half_span_hz = 10.0e9;
    } else if (k == "scan") {
        if (t.n_peaks == 0) t.n_peaks = c.scenario.b_field_mt != 0.0 ? 2 : 1;
        if (t.points == 0) t.points = 61;
        if (t.half_span_hz == 0.0) {
            const double split = std::abs(c.particle_spec.zeeman_slope_hz_per_mt * c.scenario.b_field_mt);
            t.half_span_hz = 0.5 * split + 5.0 * c.reference_hom_fwhm_hz;
        }
    }
    if (k == "saturation") {
        if (t.points == 0) t.points = 41;
        if (t.powers_w.empty()) t.powers_w = log_grid(1e-12, 100e-12, 12);
    }
    if (k == "microscopy" && t.scatterers.empty()) {
        t.scatterers = {{-4.0, 3.0, 171.0}, {2.5, -1.5, 60.0}, {5.0, 5.5, 300.0}};
    }
}

void validate(const RunConfig& c) {
    if (!c.seed) throw ConfigError("seed: required (runs are never seeded implicitly)");
    if (c.task.kind.empty()) throw ConfigError("task.kind: required");
    validate_fields(c);
}

void validate_fields(const RunConfig& c) {
    if (!c.task.kind.empty() && !kTaskKinds.count(c.task.kind))
        throw ConfigError("task.kind: unknown task '" + c.task.kind + "'");

    const auto& sc = c.scenario;
    wrap("scenario.cavity", [&] { sc.cavity.validate(); });
    wrap("scenario.timing", [&] { sc.timing.validate(); });
    wrap("scenario.chain", [&] { sc.chain.validate(); });
    wrap("scenario.particle.spec", [&] { c.particle_spec.validate(); });
    if (!(c.reference_hom_fwhm_hz > 0.0)) throw ConfigError("scenario.particle.reference.hom_fwhm_hz: must be > 0");
    if (!(sc.excitation_power_w >= 0.0)) throw ConfigError("scenario.excitation.power_w: must be >= 0");
    if (!(sc.p_sat_w > 0.0)) throw ConfigError("scenario.excitation.p_sat_w: must be > 0");
    if (!(sc.natural_lifetime_s > 0.0)) throw ConfigError("scenario.natural_lifetime_s: must be > 0");
    if (!(sc.purcell_peak >= 0.0)) throw ConfigError("scenario.purcell_peak: must be >= 0");
    if (!(sc.zeeman_narrowing > 0.0)) throw ConfigError("scenario.zeeman_narrowing: must be > 0");
    if (c.particle_source == ParticleSource::file) {
        if (c.ensemble_file.empty()) throw ConfigError("scenario.particle.file: required when source is file");
        if (!std::filesystem::exists(c.ensemble_file))
            throw ConfigError("scenario.particle.file: no such file " + c.ensemble_file.string());
    }

    const auto& t = c.task;
    if (t.trials == 0 && !t.kind.empty() && t.kind != "microscopy") throw ConfigError("task.trials: must be >= 1");
    if (t.kind == "scan") {
        if (t.n_peaks != 1 && t.n_peaks != 2) throw ConfigError("task.n_peaks: must be 1 or 2");
        if (t.points < 5) throw ConfigError("task.points: need at least 5 scan points");
        if (!(t.half_span_hz > 0.0)) throw ConfigError("task.half_span_hz: must be > 0");
    }
    if (t.kind == "saturation") {
        if (t.powers_w.size() < 3) throw ConfigError("task.powers_w: need at least 3 powers");
        for (double p : t.powers_w)
            if (!(p > 0.0)) throw ConfigError("task.powers_w: powers must be > 0");
        if (t.points < 5) throw ConfigError("task.points: need at least 5 scan points");
    }
    if (!(t.bin_us > 0.0)) throw ConfigError("task.bin_us: must be > 0");
    if (t.max_lag < 1) throw ConfigError("task.max_lag: must be >= 1");
    if (t.g2_errors != "propagation" && t.g2_errors != "bootstrap")
        throw ConfigError("task.g2_errors: expected propagation or bootstrap");
    if (t.g2_normalization != "mean_square" && t.g2_normalization != "far_lags")
        throw ConfigError("task.g2_normalization: expected mean_square or far_lags");
    if (!(t.grid.step_um > 0.0) || !(t.grid.x_max_um > t.grid.x_min_um) || !(t.grid.y_max_um > t.grid.y_min_um))
        throw ConfigError("task.grid: need step_um > 0 and max > min on both axes");
    for (std::size_t i = 0; i < t.scatterers.size(); ++i)
        if (!(t.scatterers[i].loss_ppm >= 0.0))
            throw ConfigError("task.scatterers[" + std::to_string(i) + "].loss_ppm: must be >= 0");
}

std::string to_json(const RunConfig& c, bool include_runtime) {
    return config_json(c, include_runtime).dump(2) + "\n";
}

std::string config_hash(const RunConfig& c) { return sha256_hex(config_json(c, false).dump()); }

photo::Scenario build_scenario(const RunConfig& c) {
    photo::Scenario s = c.scenario;
    s.inhom_fwhm_hz = c.particle_spec.inhom_fwhm_hz;
    switch (c.particle_source) {
        case ParticleSource::reference_ion:
            s.particle = photo::reference_particle(c.reference_hom_fwhm_hz, c.reference_center_freq_hz,
                                                   s.cavity.antinode_offset_nm);
            break;
        case ParticleSource::sampled:
            s.particle = ensemble::sample_nanoparticle(c.particle_spec, derive_seed(*c.seed, kParticleTag, 0));
            break;
        case ParticleSource::file:
            s.particle = io::read_ensemble(c.ensemble_file);
            break;
    }
    s.reference_ion = 0;
    const double center = c.particle_source == ParticleSource::sampled || s.particle.ions.empty()
                              ? c.particle_spec.inhom_center_hz
                              : s.particle.ions.front().center_freq_hz;
    s.excitation_freq_hz = center + c.excitation_detuning_hz;
    return s;
}

}  // namespace ercav::runio
