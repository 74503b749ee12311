#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ercav/rng.hpp"

namespace ercav::ensemble {

/// Position in nm relative to the particle center.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Statistical description of a doped nanoparticle batch.
///
/// `ion_density_per_um3` is the density of addressable (C2-site) ions, the
/// number that reproduces ~1000 ions in a 170 nm particle. `c2_fraction` only
/// enters the reported total population.
struct ParticleSpec {
    double diameter_mean_nm = 110.0;
    double diameter_sd_nm = 30.0;
    double ion_density_per_um3 = 4.0e5;
    double c2_fraction = 0.75;
    double inhom_center_hz = 195.30e12;
    double inhom_fwhm_hz = 6.0e9;
    double homwidth_base_hz = 5.0e6;
    double homwidth_surface_hz = 400.0e6;
    double surface_layer_nm = 10.0;
    double sd_sigma_hz = 5.0e6;
    double sd_tau_s = 60.0;
    double zeeman_slope_hz_per_mt = 10.0e6;

    void validate() const;
};

struct Ion {
    Vec3 position_nm;
    double center_freq_hz = 0.0;
    double hom_fwhm_hz = 1.0e6;
    double dipole_polar_angle = 0.0;
    double sd_sigma_hz = 0.0;
    double sd_tau_s = 1.0;
    double zeeman_slope_hz_per_mt = 0.0;
    /// Current spectral-diffusion excursion from center_freq_hz.
    double sd_offset_hz = 0.0;

    void validate() const;
};

struct Nanoparticle {
    double diameter_nm = 0.0;
    double x_um = 0.0;
    double y_um = 0.0;
    double height_nm = 0.0;  // particle center above the flat mirror
    std::vector<Ion> ions;
    double scatter_loss_ppm = 0.0;

    void validate() const;
};

struct ZeemanLine {
    double freq_hz = 0.0;
    double relative_strength = 0.5;
    double fwhm_hz = 0.0;
};

/// Scattering loss of the 170 nm reference particle; scales as d^6.
inline constexpr double kReferenceScatterLossPpm = 171.0;
inline constexpr double kReferenceDiameterNm = 170.0;
/// Narrowed / zero-field linewidth ratio observed once the lines split.
inline constexpr double kDefaultZeemanNarrowing = 12.0 / 30.0;

[[nodiscard]] double sphere_volume_um3(double diameter_nm);
[[nodiscard]] double rayleigh_scatter_loss_ppm(double diameter_nm);

/// Particle centered on the mode axis, resting on the mirror.
[[nodiscard]] Nanoparticle sample_nanoparticle(const ParticleSpec& spec, std::uint64_t seed);

[[nodiscard]] std::vector<Ion> sample_ions(double diameter_nm, const ParticleSpec& spec,
                                           std::size_t count, Rng& rng);

/// Expected ions per GHz at `freq_hz` for a Gaussian line holding `n_ions`.
[[nodiscard]] double spectral_density(double n_ions, double inhom_center_hz, double inhom_fwhm_hz,
                                      double freq_hz);
[[nodiscard]] double spectral_density(const Nanoparticle& particle, const ParticleSpec& spec,
                                      double freq_hz);

/// Two-line effective Zeeman model; lines are ordered by frequency.
[[nodiscard]] std::array<ZeemanLine, 2> apply_zeeman(const Ion& ion, double b_field_mt,
                                                     double narrowing = kDefaultZeemanNarrowing);

/// Exact Ornstein-Uhlenbeck update of the ion's excursion; returns the new instantaneous center.
double diffuse_step(Ion& ion, double dt_s, Rng& rng);

}  // namespace ercav::ensemble
