#include "ercav/cavity.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "ercav/constants.hpp"
#include "ercav/error.hpp"

namespace ercav::cavity {
namespace {

using constants::pi;

void require(bool ok, const char* message) {
    if (!ok) throw InvalidParameter(message);
}

std::vector<double> axis(double lo, double hi, double step) {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

}  // namespace

void CavityParams::validate() const {
    require(length_um > 0.0, "CavityParams.length_um must be > 0");
    require(length_um < roc_um, "CavityParams: length_um must be < roc_um (unstable resonator)");
    require(wavelength_nm > 0.0, "CavityParams.wavelength_nm must be > 0");
    require(t_fiber_ppm >= 0.0, "CavityParams.t_fiber_ppm must be >= 0");
    require(t_flat_ppm >= 0.0, "CavityParams.t_flat_ppm must be >= 0");
    require(loss_ppm >= 0.0, "CavityParams.loss_ppm must be >= 0");
    require(std::isfinite(antinode_offset_nm), "CavityParams.antinode_offset_nm must be finite");
}

double finesse_from_losses(double t1_ppm, double t2_ppm, double loss_ppm) {
    const double total = t1_ppm + t2_ppm + loss_ppm;
    require(total > 0.0, "finesse_from_losses: total round-trip loss must be > 0");
    return 2.0 * pi / (total * 1e-6);
}

ModeGeometry mode_geometry(const CavityParams& cavity) {
    cavity.validate();
    const double lambda_um = cavity.wavelength_nm * 1e-3;
    const double l = cavity.length_um;
    const double r = cavity.roc_um;

    ModeGeometry g;
    const double w0_sq = (lambda_um / pi) * std::sqrt(l * (r - l));
    g.waist_um = std::sqrt(w0_sq);
    g.mode_volume_um3 = pi * w0_sq * l / 4.0;
    g.fsr_hz = constants::speed_of_light / (2.0 * l * 1e-6);
    g.finesse = finesse_from_losses(cavity.t_fiber_ppm, cavity.t_flat_ppm, cavity.loss_ppm);
    g.fwhm_hz = g.fsr_hz / g.finesse;
    g.q_factor = (constants::speed_of_light / (cavity.wavelength_nm * 1e-9)) / g.fwhm_hz;
    return g;
}

double resonant_transmission(double t1_ppm, double t2_ppm, double loss_ppm) {
    require(t1_ppm >= 0.0 && t2_ppm >= 0.0 && loss_ppm >= 0.0,
            "resonant_transmission: transmittivities and loss must be >= 0");
    const double total = t1_ppm + t2_ppm + loss_ppm;
    require(total > 0.0, "resonant_transmission: total round-trip loss must be > 0");
    return 4.0 * t1_ppm * t2_ppm / (total * total);
}

double purcell_factor(double branching_ratio, double wavelength_nm, double q_factor,
                      double mode_volume_um3) {
    require(branching_ratio > 0.0 && branching_ratio <= 1.0,
            "purcell_factor: branching_ratio must be in (0, 1]");
    require(wavelength_nm > 0.0 && q_factor > 0.0 && mode_volume_um3 > 0.0,
            "purcell_factor: wavelength, Q and V must be > 0");
    const double lambda_um = wavelength_nm * 1e-3;
    return branching_ratio * (3.0 * lambda_um * lambda_um * lambda_um / (4.0 * pi * pi)) *
           (q_factor / mode_volume_um3);
}

double purcell_lifetime(double natural_lifetime_s, double purcell) {
    require(natural_lifetime_s > 0.0, "purcell_lifetime: natural lifetime must be > 0");
    require(purcell >= 0.0, "purcell_lifetime: Purcell factor must be >= 0");
    return natural_lifetime_s / (1.0 + purcell);
}

double purcell_from_lifetimes(double natural_lifetime_s, double lifetime_s) {
    require(natural_lifetime_s > 0.0 && lifetime_s > 0.0,
            "purcell_from_lifetimes: lifetimes must be > 0");
    return natural_lifetime_s / lifetime_s - 1.0;
}

double local_coupling(Point3 p, double dipole_polar_angle, const CavityParams& cavity,
                      double waist_um) {
    require(waist_um > 0.0, "local_coupling: waist must be > 0");
    const double c = std::cos(dipole_polar_angle);
    const double rho_sq = p.x * p.x + p.y * p.y;
    const double transverse = std::exp(-2.0 * rho_sq / (waist_um * waist_um));
    const double dz_nm = p.z * 1e3 - cavity.antinode_offset_nm;
    const double s = std::cos(2.0 * pi * dz_nm / cavity.wavelength_nm);
    return c * c * transverse * s * s;
}

double local_coupling(Point3 p, double dipole_polar_angle, const CavityParams& cavity) {
    return local_coupling(p, dipole_polar_angle, cavity, mode_geometry(cavity).waist_um);
}

double escape_efficiency(const CavityParams& cavity, double extra_loss_ppm) {
    const double total = cavity.total_loss_ppm() + extra_loss_ppm;
    require(total > 0.0, "escape_efficiency: total round-trip loss must be > 0");
    return cavity.t_fiber_ppm / total;
}

TransmissionMap microscopy_map(std::span<const Scatterer> scatterers, const CavityParams& cavity,
                               const GridSpec& grid) {
    const ModeGeometry g = mode_geometry(cavity);
    require(grid.step_um > 0.0, "microscopy_map: grid step must be > 0");
    require(grid.x_max_um >= grid.x_min_um && grid.y_max_um >= grid.y_min_um,
            "microscopy_map: grid ranges must be nonempty");
    for (const auto& s : scatterers) require(s.loss_ppm >= 0.0, "Scatterer.loss_ppm must be >= 0");

    TransmissionMap map;
    map.xs_um = axis(grid.x_min_um, grid.x_max_um, grid.step_um);
    map.ys_um = axis(grid.y_min_um, grid.y_max_um, grid.step_um);
    map.values.reserve(map.xs_um.size() * map.ys_um.size());

    const double w_sq = g.waist_um * g.waist_um;
    for (const double y : map.ys_um) {
        for (const double x : map.xs_um) {
            double loss = cavity.loss_ppm;
            for (const auto& s : scatterers) {
                const double d_sq = (x - s.x_um) * (x - s.x_um) + (y - s.y_um) * (y - s.y_um);
                loss += s.loss_ppm * std::exp(-2.0 * d_sq / w_sq);
            }
            map.values.push_back(resonant_transmission(cavity.t_fiber_ppm, cavity.t_flat_ppm, loss));
        }
    }
    return map;
}

void write_csv(const TransmissionMap& map, std::ostream& os) {
    os << "x_um,y_um,transmission\n";
    char line[96];
    for (std::size_t iy = 0; iy < map.ys_um.size(); ++iy) {
        for (std::size_t ix = 0; ix < map.xs_um.size(); ++ix) {
            std::snprintf(line, sizeof line, "%.12g,%.12g,%.12g\n", map.xs_um[ix], map.ys_um[iy],
                          map.at(ix, iy));
            os << line;
        }
    }
}

}  // namespace ercav::cavity
