#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ercav/cavity.hpp"
#include "ercav/ensemble.hpp"
#include "ercav/photodynamics.hpp"

namespace ercav::runio {

inline constexpr int kConfigVersion = 1;

enum class ParticleSource { reference_ion, sampled, file };

/// Parameters for the simulation or analysis a run performs. Zero counts mean
/// "use the default for this kind" and are resolved by resolve_defaults().
struct TaskConfig {
    std::string kind;  // microscopy|decay|scan|saturation|g2|figure2|figure3|figure4
    std::uint64_t trials = 0;  // per run, or per scan point for scans
    // scan
    double half_span_hz = 0.0;
    std::size_t points = 0;
    int n_peaks = 0;
    // saturation
    std::vector<double> powers_w;
    // decay
    double bin_us = 5.0;
    // g2
    std::size_t max_lag = 50;
    std::string g2_errors = "propagation";
    std::string g2_normalization = "mean_square";
    std::size_t bootstrap_resamples = 1000;
    bool write_timetags = false;
    // microscopy
    cavity::GridSpec grid;
    std::vector<cavity::Scatterer> scatterers;
};

struct RunConfig {
    int version = kConfigVersion;
    /// Detector preset applied before any explicit chain values: "default" or "g2-paper".
    std::string preset = "default";

    ParticleSource particle_source = ParticleSource::reference_ion;
    ensemble::ParticleSpec particle_spec;
    double reference_hom_fwhm_hz = 2.20e6;
    double reference_center_freq_hz = 195.30e12;
    std::filesystem::path ensemble_file;
    /// Laser frequency relative to the reference line (or the inhomogeneous center).
    double excitation_detuning_hz = 0.0;

    /// Everything except the particle and excitation frequency, which build_scenario() fills in.
    photo::Scenario scenario;

    TaskConfig task;
    std::optional<std::uint64_t> seed;
    std::filesystem::path output_dir = "out";
    unsigned threads = 1;
};

/// Reference defaults, including the detector preset. Seed and task stay unset.
[[nodiscard]] RunConfig default_config();

/// Parses a JSON config and checks it with validate_fields(). Throws ConfigError naming the field.
[[nodiscard]] RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Applies a detector preset by name; throws ConfigError on unknown names.
void apply_preset(RunConfig& config, const std::string& preset);

/// Fills task counts left at zero with the defaults for `task.kind`.
void resolve_defaults(RunConfig& config);

/// Checks every invariant; throws ConfigError naming the offending field.
void validate(const RunConfig& config);
/// Like validate() but lets seed and task.kind stay unset, for configs completed from the command line.
void validate_fields(const RunConfig& config);

/// Fully resolved config as JSON; parse_config(to_json(c)) reproduces c.
[[nodiscard]] std::string to_json(const RunConfig& config, bool include_runtime = true);

/// SHA-256 of the resolved config without threads and output_dir, which never affect outputs.
[[nodiscard]] std::string config_hash(const RunConfig& config);

/// Resolves the particle (sampling it from the seed if requested) and the laser frequency.
[[nodiscard]] photo::Scenario build_scenario(const RunConfig& config);

[[nodiscard]] std::string to_string(ParticleSource source);

}  // namespace ercav::runio
