#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace ercav::cavity {

/// Plano-concave fiber Fabry-Perot resonator. Losses are per round trip, in ppm.
struct CavityParams {
    double roc_um = 60.0;
    double length_um = 6.0;
    double wavelength_nm = 1535.0;
    double t_fiber_ppm = 100.0;
    double t_flat_ppm = 30.0;
    double loss_ppm = 13.0;
    double antinode_offset_nm = 50.0;

    /// Throws InvalidParameter naming the first violated invariant.
    void validate() const;
    [[nodiscard]] double total_loss_ppm() const { return t_fiber_ppm + t_flat_ppm + loss_ppm; }
};

struct ModeGeometry {
    double waist_um = 0.0;
    double mode_volume_um3 = 0.0;
    double fsr_hz = 0.0;
    double finesse = 0.0;
    double fwhm_hz = 0.0;
    double q_factor = 0.0;
};

struct Scatterer {
    double x_um = 0.0;
    double y_um = 0.0;
    double loss_ppm = 0.0;
};

/// Position of an emitter: x, y from the mode axis and z above the flat mirror, all in um.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// F = 2 pi / total round-trip loss.
[[nodiscard]] double finesse_from_losses(double t1_ppm, double t2_ppm, double loss_ppm);

[[nodiscard]] ModeGeometry mode_geometry(const CavityParams& cavity);

/// On-resonance transmission 4 t1 t2 / (t1 + t2 + loss)^2.
[[nodiscard]] double resonant_transmission(double t1_ppm, double t2_ppm, double loss_ppm);

/// Expected Purcell factor zeta (3 lambda^3 / 4 pi^2) (Q / V).
[[nodiscard]] double purcell_factor(double branching_ratio, double wavelength_nm, double q_factor,
                                    double mode_volume_um3);

/// Cavity-enhanced lifetime, T_nat / (1 + C).
[[nodiscard]] double purcell_lifetime(double natural_lifetime_s, double purcell);

/// Inverse of purcell_lifetime.
[[nodiscard]] double purcell_from_lifetimes(double natural_lifetime_s, double lifetime_s);

/// Relative coupling xi in [0, 1]: dipole projection x transverse Gaussian x standing wave.
[[nodiscard]] double local_coupling(Point3 position_um, double dipole_polar_angle,
                                    const CavityParams& cavity, double waist_um);
[[nodiscard]] double local_coupling(Point3 position_um, double dipole_polar_angle,
                                    const CavityParams& cavity);

/// Fraction of the round-trip loss leaving through the fiber mirror.
[[nodiscard]] double escape_efficiency(const CavityParams& cavity, double extra_loss_ppm = 0.0);

struct GridSpec {
    double x_min_um = -10.0;
    double x_max_um = 10.0;
    double y_min_um = -10.0;
    double y_max_um = 10.0;
    double step_um = 0.5;
};

/// Row-major (y outer, x inner) transmission fractions.
struct TransmissionMap {
    std::vector<double> xs_um;
    std::vector<double> ys_um;
    std::vector<double> values;

    [[nodiscard]] double at(std::size_t ix, std::size_t iy) const { return values[iy * xs_um.size() + ix]; }
};

/// Scattering-loss microscopy: transmission while the mode is scanned over the mirror.
[[nodiscard]] TransmissionMap microscopy_map(std::span<const Scatterer> scatterers,
                                             const CavityParams& cavity, const GridSpec& grid);

/// CSV with header `x_um,y_um,transmission`, values printed with %.12g.
void write_csv(const TransmissionMap& map, std::ostream& os);

}  // namespace ercav::cavity
