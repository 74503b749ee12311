#include "ercav/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "ercav/constants.hpp"
#include "ercav/error.hpp"

namespace ercav::ensemble {
namespace {

using constants::pi;

void require(bool ok, const char* message) {
    if (!ok) throw InvalidParameter(message);
}

}  // namespace

void ParticleSpec::validate() const {
    require(diameter_mean_nm > 0.0, "ParticleSpec.diameter_mean_nm must be > 0");
    require(diameter_sd_nm >= 0.0, "ParticleSpec.diameter_sd_nm must be >= 0");
    require(ion_density_per_um3 >= 0.0, "ParticleSpec.ion_density_per_um3 must be >= 0");
    require(c2_fraction >= 0.0 && c2_fraction <= 1.0, "ParticleSpec.c2_fraction must be in [0, 1]");
    require(inhom_fwhm_hz > 0.0, "ParticleSpec.inhom_fwhm_hz must be > 0");
    require(homwidth_base_hz > 0.0, "ParticleSpec.homwidth_base_hz must be > 0");
    require(homwidth_surface_hz >= homwidth_base_hz,
            "ParticleSpec.homwidth_surface_hz must be >= homwidth_base_hz");
    require(surface_layer_nm >= 0.0, "ParticleSpec.surface_layer_nm must be >= 0");
    require(sd_sigma_hz >= 0.0, "ParticleSpec.sd_sigma_hz must be >= 0");
    require(sd_tau_s > 0.0, "ParticleSpec.sd_tau_s must be > 0");
}

void Ion::validate() const {
    require(hom_fwhm_hz > 0.0, "Ion.hom_fwhm_hz must be > 0");
    require(sd_tau_s > 0.0, "Ion.sd_tau_s must be > 0");
    require(sd_sigma_hz >= 0.0, "Ion.sd_sigma_hz must be >= 0");
}

void Nanoparticle::validate() const {
    require(diameter_nm > 0.0, "Nanoparticle.diameter_nm must be > 0");
    require(scatter_loss_ppm >= 0.0, "Nanoparticle.scatter_loss_ppm must be >= 0");
    const double r = diameter_nm / 2.0;
    for (const auto& ion : ions) {
        ion.validate();
        const auto& p = ion.position_nm;
        require(std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z) <= r * (1.0 + 1e-12),
                "Ion.position_nm lies outside the particle");
    }
}

double sphere_volume_um3(double diameter_nm) {
    const double d_um = diameter_nm * 1e-3;
    return pi / 6.0 * d_um * d_um * d_um;
}

double rayleigh_scatter_loss_ppm(double diameter_nm) {
    return kReferenceScatterLossPpm * std::pow(diameter_nm / kReferenceDiameterNm, 6);
}

Nanoparticle sample_nanoparticle(const ParticleSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed, Stream::particle, 0);

    double d = spec.diameter_mean_nm;
    if (spec.diameter_sd_nm > 0.0) {
        do {
            d = spec.diameter_mean_nm + spec.diameter_sd_nm * rng.normal();
        } while (d <= 0.0);
    }

    Nanoparticle np;
    np.diameter_nm = d;
    np.height_nm = d / 2.0;
    np.scatter_loss_ppm = rayleigh_scatter_loss_ppm(d);
    const auto count = rng.poisson(spec.ion_density_per_um3 * sphere_volume_um3(d));
    np.ions = sample_ions(d, spec, static_cast<std::size_t>(count), rng);
    return np;
}

std::vector<Ion> sample_ions(double diameter_nm, const ParticleSpec& spec, std::size_t count,
                             Rng& rng) {
    const double radius = diameter_nm / 2.0;
    const double sigma = spec.inhom_fwhm_hz / constants::fwhm_per_sigma;
    const double log_ratio = std::log(spec.homwidth_surface_hz / spec.homwidth_base_hz);

    std::vector<Ion> ions;
    ions.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Ion ion;
        const double r = radius * std::cbrt(rng.uniform());
        const double cos_t = 2.0 * rng.uniform() - 1.0;
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        const double phi = 2.0 * pi * rng.uniform();
        ion.position_nm = {r * sin_t * std::cos(phi), r * sin_t * std::sin(phi), r * cos_t};

        ion.center_freq_hz = spec.inhom_center_hz + sigma * rng.normal();
        ion.dipole_polar_angle = std::acos(1.0 - 2.0 * rng.uniform());

        // One draw per ion whether or not it is in the shell keeps streams aligned.
        const double u = rng.uniform();
        const double depth = radius - r;
        ion.hom_fwhm_hz = depth > spec.surface_layer_nm
                              ? spec.homwidth_base_hz
                              : spec.homwidth_base_hz * std::exp(u * log_ratio);

        ion.sd_sigma_hz = spec.sd_sigma_hz;
        ion.sd_tau_s = spec.sd_tau_s;
        ion.zeeman_slope_hz_per_mt = spec.zeeman_slope_hz_per_mt;
        ions.push_back(ion);
    }
    return ions;
}

double spectral_density(double n_ions, double inhom_center_hz, double inhom_fwhm_hz,
                        double freq_hz) {
    require(inhom_fwhm_hz > 0.0, "spectral_density: inhomogeneous FWHM must be > 0");
    const double sigma_ghz = inhom_fwhm_hz / constants::fwhm_per_sigma * 1e-9;
    const double x = (freq_hz - inhom_center_hz) * 1e-9 / sigma_ghz;
    return n_ions * std::exp(-0.5 * x * x) / (sigma_ghz * std::sqrt(2.0 * pi));
}

double spectral_density(const Nanoparticle& particle, const ParticleSpec& spec, double freq_hz) {
    return spectral_density(static_cast<double>(particle.ions.size()), spec.inhom_center_hz,
                            spec.inhom_fwhm_hz, freq_hz);
}

std::array<ZeemanLine, 2> apply_zeeman(const Ion& ion, double b_field_mt, double narrowing) {
    require(narrowing > 0.0, "apply_zeeman: narrowing ratio must be > 0");
    const double center = ion.center_freq_hz + ion.sd_offset_hz;
    const double half_split = 0.5 * ion.zeeman_slope_hz_per_mt * b_field_mt;
    const double width = b_field_mt != 0.0 ? ion.hom_fwhm_hz * narrowing : ion.hom_fwhm_hz;
    ZeemanLine a{center - half_split, 0.5, width};
    ZeemanLine b{center + half_split, 0.5, width};
    if (b.freq_hz < a.freq_hz) std::swap(a, b);
    return {a, b};
}

double diffuse_step(Ion& ion, double dt_s, Rng& rng) {
    require(dt_s >= 0.0, "diffuse_step: dt must be >= 0");
    const double decay = std::exp(-dt_s / ion.sd_tau_s);
    const double xi = rng.normal();
    ion.sd_offset_hz = ion.sd_offset_hz * decay +
                       xi * ion.sd_sigma_hz * std::sqrt(std::max(0.0, 1.0 - decay * decay));
    return ion.center_freq_hz + ion.sd_offset_hz;
}

}  // namespace ercav::ensemble
