#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ercav/cavity.hpp"
#include "ercav/ensemble.hpp"
#include "ercav/rng.hpp"
#include "ercav/timetags.hpp"

namespace ercav::photo {

/// Pulsed protocol: excite, then open the detection window.
struct ProtocolTiming {
    double pulse_us = 200.0;
    double window_us = 500.0;
    double rep_rate_hz = 1400.0;
    double duty_cycle = 0.7;

    void validate() const;
    [[nodiscard]] double period_us() const { return 1e6 / rep_rate_hz; }
};

struct DetectionChain {
    double escape_efficiency = 100.0 / 314.0;
    double mode_match = 0.135;
    double path_efficiency = 0.588;
    double detector_efficiency = 0.8;
    double dark_rate_hz = 8.0;
    double dead_time_ns = 50.0;

    void validate() const;
    /// Probability that a photon emitted into the cavity mode produces a click.
    [[nodiscard]] double overall() const {
        return escape_efficiency * mode_match * path_efficiency * detector_efficiency;
    }
    /// Probability that a cavity photon reaches the fiber.
    [[nodiscard]] double fiber_coupling() const { return escape_efficiency * mode_match; }

    /// 80 % efficiency, 8 Hz dark counts.
    [[nodiscard]] static DetectionChain default_preset() { return {}; }
    /// Detector detuned to 50 % efficiency for 1.4 Hz dark counts.
    [[nodiscard]] static DetectionChain g2_preset() {
        DetectionChain c;
        c.detector_efficiency = 0.5;
        c.dark_rate_hz = 1.4;
        return c;
    }
};

struct Scenario {
    cavity::CavityParams cavity;
    ensemble::Nanoparticle particle;
    ProtocolTiming timing;
    DetectionChain chain;
    double excitation_power_w = 10.7e-12;
    double excitation_freq_hz = 0.0;
    double p_sat_w = 10.7e-12;
    double b_field_mt = 0.0;
    double natural_lifetime_s = 11e-3;
    /// Purcell factor for an ideally placed, aligned dipole (xi = 1).
    double purcell_peak = 123.0;
    double zeeman_narrowing = ensemble::kDefaultZeemanNarrowing;
    /// Inhomogeneous width; ions beyond 3 sigma of the laser are skipped.
    double inhom_fwhm_hz = 6.0e9;
    std::size_t reference_ion = 0;

    void validate() const;
};

/// Single ion at the field antinode on the mode axis with an aligned dipole.
[[nodiscard]] ensemble::Nanoparticle reference_particle(double hom_fwhm_hz = 2.20e6,
                                                        double center_freq_hz = 195.30e12,
                                                        double antinode_offset_nm = 50.0);

/// Single-ion scenario with the reference particle, laser on resonance at P = P_sat.
[[nodiscard]] Scenario reference_scenario();

/// Incoherent pump rate (Gamma/2) (P/P_sat) L(detuning), L Lorentzian of FWHM `line_fwhm_hz`.
[[nodiscard]] double pump_rate(double power_w, double detuning_hz, double line_fwhm_hz,
                               double p_sat_w, double decay_rate);

/// Two-level rate equation from the ground state: p_ss (1 - exp(-(2W + Gamma) t)).
[[nodiscard]] double excited_population(double pump, double decay_rate, double duration_s);

/// Precomputed per-ion rates for one scenario; run_trial is const and thread safe.
class TrialEngine {
public:
    explicit TrialEngine(const Scenario& scenario);

    [[nodiscard]] std::vector<TimeTagRecord> run_trial(std::uint32_t trial_index, Rng& rng) const;

    /// Expected signal clicks per kept trial (dark counts excluded).
    [[nodiscard]] double expected_signal_probability() const;
    /// Expected dark counts per kept trial.
    [[nodiscard]] double expected_dark_counts() const { return dark_mean_; }
    [[nodiscard]] std::size_t active_ions() const { return ions_.size(); }

private:
    struct Line {
        double freq_hz;
        double strength;
        double fwhm_hz;
    };
    struct ActiveIon {
        std::vector<Line> lines;
        double decay_rate;
        double pump;
        double p_excited;
        double detect_prob;  // beta times chain efficiency
    };

    std::vector<ActiveIon> ions_;
    double window_s_;
    double dark_mean_;
    std::uint64_t window_ps_;
    std::uint64_t dead_time_ps_;
};

[[nodiscard]] std::vector<TimeTagRecord> run_trial(const Scenario& scenario,
                                                   std::uint32_t trial_index, Rng& rng);

/// Trial `i` draws from Rng(master_seed, trial, i); output is independent of `threads`.
[[nodiscard]] TimeTagStream run_sequence(const Scenario& scenario, std::uint64_t n_trials,
                                         std::uint64_t master_seed, unsigned threads = 1);

struct Histogram {
    std::vector<double> bin_centers_us;
    std::vector<double> counts;
};

[[nodiscard]] Histogram decay_histogram(const TimeTagStream& stream, double bin_us,
                                        double window_us);

struct SpectrumScan {
    std::vector<double> freq_hz;
    std::vector<double> p_det;
    std::vector<double> err;
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> trials;
};

[[nodiscard]] SpectrumScan scan_excitation(const Scenario& scenario,
                                           std::span<const double> freq_grid_hz,
                                           std::uint64_t trials_per_point, std::uint64_t seed,
                                           unsigned threads = 1);

/// Evenly spaced grid of `points` frequencies centered on `center_hz`.
[[nodiscard]] std::vector<double> linear_grid(double center_hz, double half_span_hz,
                                              std::size_t points);

struct SaturationOptions {
    std::size_t points_per_scan = 41;
    /// Scan half-span in units of the expected power-broadened FWHM.
    double half_span_fwhm = 3.0;
    unsigned threads = 1;
};

struct SaturationPoint {
    double power_w = 0.0;
    double p_det = 0.0;  // fitted peak height above background
    double p_det_err = 0.0;
    double fwhm_hz = 0.0;
    double fwhm_err_hz = 0.0;
    bool converged = false;
};

[[nodiscard]] std::vector<SaturationPoint> saturation_series(const Scenario& scenario,
                                                             std::span<const double> power_grid_w,
                                                             std::uint64_t trials_per_point,
                                                             std::uint64_t seed,
                                                             const SaturationOptions& options = {});

/// Mean intra-cavity photon number for the drive power (diagnostic only).
[[nodiscard]] double intracavity_photons(const Scenario& scenario, double power_w);

}  // namespace ercav::photo
