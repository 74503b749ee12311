#include <cmath>
#include <set>

#include <json.hpp>

#include "ercav/error.hpp"
#include "ercav/io.hpp"

namespace ercav::io {
namespace {

using nlohmann::json;

// JSON has no NaN; singular fits report null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double get_double(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + "." + key + ": missing");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

}  // namespace

std::string to_json(const fit::FitResult& r) {
    json params = json::array();
    for (std::size_t i = 0; i < r.params.size(); ++i)
        params.push_back({{"name", r.names[i]}, {"value", number(r.params[i])}, {"error", number(r.error(i))}});
    json cov = json::array();
    for (double c : r.covariance) cov.push_back(number(c));
    json doc = {{"version", 1},
                {"parameters", params},
                {"covariance", cov},
                {"chi2", number(r.chi2)},
                {"dof", r.dof},
                {"reduced_chi2", number(r.reduced_chi2())},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"message", r.message}};
    return doc.dump(2) + "\n";
}

std::string to_json(const estimators::G2Series& g2) {
    json values = json::array();
    for (std::size_t i = 0; i < g2.lags.size(); ++i)
        values.push_back({{"lag", g2.lags[i]}, {"g2", number(g2.values[i])}, {"error", number(g2.errors[i])}});
    json doc = {{"version", 1},
                {"n_trials", g2.n_trials},
                {"kept_fraction", g2.kept_fraction},
                {"mean_counts_per_trial", g2.mean_counts},
                {"values", values}};
    return doc.dump(2) + "\n";
}

std::string to_json(const estimators::DecayFit& f) {
    json doc = {{"version", 1},
                {"lifetime_us", number(f.lifetime_us)},
                {"lifetime_err_us", number(f.lifetime_err_us)},
                {"amplitude", number(f.amplitude)},
                {"background", number(f.background)},
                {"fit", json::parse(to_json(f.fit))}};
    return doc.dump(2) + "\n";
}

std::string to_json(const estimators::LorentzianFit& f) {
    const auto arr = [](const std::vector<double>& v) {
        json a = json::array();
        for (double d : v) a.push_back(number(d));
        return a;
    };
    json doc = {{"version", 1},
                {"centers_hz", arr(f.centers)},
                {"centers_err_hz", arr(f.centers_err)},
                {"fwhms_hz", arr(f.fwhms)},
                {"fwhms_err_hz", arr(f.fwhms_err)},
                {"amplitudes", arr(f.amplitudes)},
                {"amplitudes_err", arr(f.amplitudes_err)},
                {"offset", number(f.offset)},
                {"offset_err", number(f.offset_err)},
                {"splitting_hz", number(f.splitting)},
                {"splitting_err_hz", number(f.splitting_err)},
                {"fit", json::parse(to_json(f.fit))}};
    return doc.dump(2) + "\n";
}

std::string to_json(const estimators::SaturationRateFit& f) {
    json doc = {{"version", 1},
                {"p_max", number(f.p_max)},
                {"p_max_err", number(f.p_max_err)},
                {"p_sat_w", number(f.p_sat_w)},
                {"p_sat_err_w", number(f.p_sat_err_w)},
                {"degenerate", f.degenerate},
                {"fit", json::parse(to_json(f.fit))}};
    return doc.dump(2) + "\n";
}

std::string to_json(const estimators::SaturationLinewidthFit& f) {
    json doc = {{"version", 1},
                {"linewidth0_hz", number(f.linewidth0_hz)},
                {"linewidth0_err_hz", number(f.linewidth0_err_hz)},
                {"p_sat_w", number(f.p_sat_w)},
                {"p_sat_err_w", number(f.p_sat_err_w)},
                {"degenerate", f.degenerate},
                {"fit", json::parse(to_json(f.fit))}};
    return doc.dump(2) + "\n";
}

std::string ensemble_to_json(const ensemble::Nanoparticle& p) {
    json ions = json::array();
    for (const auto& ion : p.ions) {
        ions.push_back({{"x_nm", ion.position_nm.x},
                        {"y_nm", ion.position_nm.y},
                        {"z_nm", ion.position_nm.z},
                        {"center_freq_hz", ion.center_freq_hz},
                        {"hom_fwhm_hz", ion.hom_fwhm_hz},
                        {"dipole_polar_angle_rad", ion.dipole_polar_angle},
                        {"sd_sigma_hz", ion.sd_sigma_hz},
                        {"sd_tau_s", ion.sd_tau_s},
                        {"zeeman_slope_hz_per_mt", ion.zeeman_slope_hz_per_mt},
                        {"sd_offset_hz", ion.sd_offset_hz}});
    }
    json doc = {{"version", kEnsembleFormatVersion},
                {"diameter_nm", p.diameter_nm},
                {"x_um", p.x_um},
                {"y_um", p.y_um},
                {"height_nm", p.height_nm},
                {"scatter_loss_ppm", p.scatter_loss_ppm},
                {"ions", ions}};
    return doc.dump(1) + "\n";
}

ensemble::Nanoparticle ensemble_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("ensemble: invalid JSON: ") + e.what());
    }
    reject_unknown(doc, {"version", "diameter_nm", "x_um", "y_um", "height_nm", "scatter_loss_ppm", "ions"},
                   "ensemble");
    if (!doc.contains("version") || !doc["version"].is_number_integer())
        throw ConfigError("ensemble.version: missing");
    if (doc["version"].get<int>() != kEnsembleFormatVersion)
        throw ConfigError("ensemble.version: unsupported version " + doc["version"].dump());

    ensemble::Nanoparticle p;
    p.diameter_nm = get_double(doc, "diameter_nm", "ensemble");
    p.x_um = get_double(doc, "x_um", "ensemble");
    p.y_um = get_double(doc, "y_um", "ensemble");
    p.height_nm = get_double(doc, "height_nm", "ensemble");
    p.scatter_loss_ppm = get_double(doc, "scatter_loss_ppm", "ensemble");
    if (!doc.contains("ions") || !doc["ions"].is_array()) throw ConfigError("ensemble.ions: expected an array");
    const std::set<std::string> ion_keys = {"x_nm", "y_nm", "z_nm", "center_freq_hz", "hom_fwhm_hz",
                                            "dipole_polar_angle_rad", "sd_sigma_hz", "sd_tau_s",
                                            "zeeman_slope_hz_per_mt", "sd_offset_hz"};
    std::size_t i = 0;
    for (const auto& j : doc["ions"]) {
        const std::string where = "ensemble.ions[" + std::to_string(i++) + "]";
        reject_unknown(j, ion_keys, where);
        ensemble::Ion ion;
        ion.position_nm = {get_double(j, "x_nm", where), get_double(j, "y_nm", where), get_double(j, "z_nm", where)};
        ion.center_freq_hz = get_double(j, "center_freq_hz", where);
        ion.hom_fwhm_hz = get_double(j, "hom_fwhm_hz", where);
        ion.dipole_polar_angle = get_double(j, "dipole_polar_angle_rad", where);
        ion.sd_sigma_hz = get_double(j, "sd_sigma_hz", where);
        ion.sd_tau_s = get_double(j, "sd_tau_s", where);
        ion.zeeman_slope_hz_per_mt = get_double(j, "zeeman_slope_hz_per_mt", where);
        ion.sd_offset_hz = get_double(j, "sd_offset_hz", where);
        p.ions.push_back(ion);
    }
    try {
        p.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("ensemble: ") + e.what());
    }
    return p;
}

void write_ensemble(const ensemble::Nanoparticle& particle, const std::filesystem::path& path) {
    write_file_atomic(path, ensemble_to_json(particle));
}

ensemble::Nanoparticle read_ensemble(const std::filesystem::path& path) {
    return ensemble_from_json(read_file(path));
}

}  // namespace ercav::io
