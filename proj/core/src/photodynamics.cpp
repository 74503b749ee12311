#include "ercav/photodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "ercav/constants.hpp"
#include "ercav/error.hpp"
#include "ercav/estimators.hpp"

namespace ercav::photo {
namespace {

using constants::pi;

void require(bool ok, const char* message) {
    if (!ok) throw InvalidParameter(message);
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

constexpr std::uint64_t kScanTag = 0x5CA7'0001ULL;
constexpr std::uint64_t kSaturationTag = 0x5A70'0002ULL;

// Per-ion random numbers live at fixed blocks of the trial stream, so ion k
// sees the same numbers whatever the drive, chain or set of active ions.
constexpr std::uint32_t kBlocksPerIon = 2;

}  // namespace

void ProtocolTiming::validate() const {
    require(pulse_us > 0.0, "ProtocolTiming.pulse_us must be > 0");
    require(window_us > 0.0, "ProtocolTiming.window_us must be > 0");
    require(rep_rate_hz > 0.0, "ProtocolTiming.rep_rate_hz must be > 0");
    require(pulse_us + window_us <= period_us() * (1.0 + 1e-12),
            "ProtocolTiming: pulse_us + window_us exceeds the trial period 1/rep_rate_hz");
    require(duty_cycle > 0.0 && duty_cycle <= 1.0, "ProtocolTiming.duty_cycle must be in (0, 1]");
}

void DetectionChain::validate() const {
    require(in_unit(escape_efficiency), "DetectionChain.escape_efficiency must be in [0, 1]");
    require(in_unit(mode_match), "DetectionChain.mode_match must be in [0, 1]");
    require(in_unit(path_efficiency), "DetectionChain.path_efficiency must be in [0, 1]");
    require(in_unit(detector_efficiency), "DetectionChain.detector_efficiency must be in [0, 1]");
    require(dark_rate_hz >= 0.0, "DetectionChain.dark_rate_hz must be >= 0");
    require(dead_time_ns >= 0.0, "DetectionChain.dead_time_ns must be >= 0");
}

void Scenario::validate() const {
    cavity.validate();
    particle.validate();
    timing.validate();
    chain.validate();
    require(excitation_power_w >= 0.0, "Scenario.excitation_power_w must be >= 0");
    require(p_sat_w > 0.0, "Scenario.p_sat_w must be > 0");
    require(natural_lifetime_s > 0.0, "Scenario.natural_lifetime_s must be > 0");
    require(purcell_peak >= 0.0, "Scenario.purcell_peak must be >= 0");
    require(zeeman_narrowing > 0.0, "Scenario.zeeman_narrowing must be > 0");
    require(inhom_fwhm_hz > 0.0, "Scenario.inhom_fwhm_hz must be > 0");
    require(particle.ions.empty() || reference_ion < particle.ions.size(),
            "Scenario.reference_ion does not name an ion of the particle");
}

ensemble::Nanoparticle reference_particle(double hom_fwhm_hz, double center_freq_hz,
                                          double antinode_offset_nm) {
    ensemble::Nanoparticle np;
    np.diameter_nm = ensemble::kReferenceDiameterNm;
    np.height_nm = np.diameter_nm / 2.0;
    np.scatter_loss_ppm = ensemble::kReferenceScatterLossPpm;
    ensemble::Ion ion;
    ion.position_nm = {0.0, 0.0, antinode_offset_nm - np.height_nm};
    ion.center_freq_hz = center_freq_hz;
    ion.hom_fwhm_hz = hom_fwhm_hz;
    ion.dipole_polar_angle = 0.0;
    ion.sd_sigma_hz = 0.0;
    ion.sd_tau_s = 60.0;
    ion.zeeman_slope_hz_per_mt = 10.0e6;
    np.ions.push_back(ion);
    return np;
}

Scenario reference_scenario() {
    Scenario s;
    s.particle = reference_particle(2.20e6, 195.30e12, s.cavity.antinode_offset_nm);
    s.excitation_freq_hz = s.particle.ions.front().center_freq_hz;
    s.excitation_power_w = s.p_sat_w;
    return s;
}

double pump_rate(double power_w, double detuning_hz, double line_fwhm_hz, double p_sat_w,
                 double decay_rate) {
    require(power_w >= 0.0, "pump_rate: power must be >= 0");
    require(line_fwhm_hz > 0.0 && p_sat_w > 0.0, "pump_rate: linewidth and P_sat must be > 0");
    const double h = 0.5 * line_fwhm_hz;
    const double lineshape = h * h / (detuning_hz * detuning_hz + h * h);
    return 0.5 * decay_rate * (power_w / p_sat_w) * lineshape;
}

double excited_population(double pump, double decay_rate, double duration_s) {
    require(pump >= 0.0 && decay_rate >= 0.0 && duration_s >= 0.0,
            "excited_population: rates and duration must be >= 0");
    const double total = 2.0 * pump + decay_rate;
    if (!(total > 0.0)) return 0.0;
    return pump / total * -std::expm1(-total * duration_s);
}

TrialEngine::TrialEngine(const Scenario& s) {
    s.validate();
    const double waist = cavity::mode_geometry(s.cavity).waist_um;
    const double pulse_s = s.timing.pulse_us * 1e-6;
    window_s_ = s.timing.window_us * 1e-6;
    window_ps_ = static_cast<std::uint64_t>(std::llround(s.timing.window_us * 1e6));
    dead_time_ps_ = static_cast<std::uint64_t>(std::llround(s.chain.dead_time_ns * 1e3));
    dark_mean_ = s.chain.dark_rate_hz * window_s_;

    const double gamma_nat = 1.0 / s.natural_lifetime_s;
    const double eta = s.chain.overall();
    const double reach = 3.0 * s.inhom_fwhm_hz / constants::fwhm_per_sigma;

    ions_.resize(s.particle.ions.size());
    for (std::size_t k = 0; k < s.particle.ions.size(); ++k) {
        const auto& ion = s.particle.ions[k];
        ActiveIon& a = ions_[k];
        a.p_excited = 0.0;
        a.detect_prob = 0.0;
        a.decay_rate = gamma_nat;
        a.pump = 0.0;
        if (std::abs(ion.center_freq_hz + ion.sd_offset_hz - s.excitation_freq_hz) > reach) continue;

        const cavity::Point3 pos{s.particle.x_um + ion.position_nm.x * 1e-3,
                                 s.particle.y_um + ion.position_nm.y * 1e-3,
                                 (s.particle.height_nm + ion.position_nm.z) * 1e-3};
        const double cx = s.purcell_peak * cavity::local_coupling(pos, ion.dipole_polar_angle, s.cavity, waist);
        a.decay_rate = gamma_nat * (1.0 + cx);
        a.detect_prob = cx / (1.0 + cx) * eta;

        if (s.b_field_mt == 0.0) {
            a.lines.push_back({ion.center_freq_hz + ion.sd_offset_hz, 1.0, ion.hom_fwhm_hz});
        } else {
            for (const auto& l : ensemble::apply_zeeman(ion, s.b_field_mt, s.zeeman_narrowing))
                a.lines.push_back({l.freq_hz, l.relative_strength, l.fwhm_hz});
        }
        for (const auto& l : a.lines)
            a.pump += l.strength * pump_rate(s.excitation_power_w, s.excitation_freq_hz - l.freq_hz,
                                             l.fwhm_hz, s.p_sat_w, a.decay_rate);
        a.p_excited = excited_population(a.pump, a.decay_rate, pulse_s);
    }
}

double TrialEngine::expected_signal_probability() const {
    double p = 0.0;
    for (const auto& a : ions_) p += a.p_excited * -std::expm1(-a.decay_rate * window_s_) * a.detect_prob;
    return p;
}

std::vector<TimeTagRecord> TrialEngine::run_trial(std::uint32_t trial_index, Rng& rng) const {
    std::vector<TimeTagRecord> out;
    const auto to_ps = [](double t) { return static_cast<std::uint64_t>(std::floor(t * 1e12)); };

    for (std::size_t k = 0; k < ions_.size(); ++k) {
        const ActiveIon& a = ions_[k];
        rng.seek(static_cast<std::uint32_t>(k) * kBlocksPerIon);
        const double u_excite = rng.uniform();
        if (!(u_excite < a.p_excited)) continue;
        const double t_emit = rng.exponential(a.decay_rate);
        const double u_detect = rng.uniform();
        if (t_emit < window_s_ && u_detect < a.detect_prob) out.push_back({trial_index, 0, to_ps(t_emit)});
    }

    rng.seek(static_cast<std::uint32_t>(ions_.size()) * kBlocksPerIon);
    const auto n_dark = rng.poisson(dark_mean_);
    for (std::uint64_t i = 0; i < n_dark; ++i) {
        const auto t = std::min(to_ps(rng.uniform() * window_s_), window_ps_ - 1);
        out.push_back({trial_index, 0, t});
    }

    if (out.size() > 1) {
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time_ps < b.time_ps; });
        // Non-extending veto measured from the last registered click.
        std::vector<TimeTagRecord> kept;
        kept.reserve(out.size());
        for (const auto& r : out)
            if (kept.empty() || r.time_ps - kept.back().time_ps >= dead_time_ps_) kept.push_back(r);
        out.swap(kept);
    }
    return out;
}

std::vector<TimeTagRecord> run_trial(const Scenario& scenario, std::uint32_t trial_index, Rng& rng) {
    return TrialEngine(scenario).run_trial(trial_index, rng);
}

TimeTagStream run_sequence(const Scenario& scenario, std::uint64_t n_trials, std::uint64_t master_seed,
                           unsigned threads) {
    require(n_trials >= 1, "run_sequence: n_trials must be >= 1");
    if (n_trials - 1 > std::numeric_limits<std::uint32_t>::max())
        throw InvalidParameter("run_sequence: trial index overflows 32 bits");
    const TrialEngine engine(scenario);
    const double duty = scenario.timing.duty_cycle;

    threads = std::max(1u, threads);
    const std::uint64_t n_chunks = std::min<std::uint64_t>(threads, n_trials);
    std::vector<std::vector<TimeTagRecord>> parts(n_chunks);
    std::vector<std::uint64_t> kept(n_chunks, 0);

    const auto work = [&](std::uint64_t chunk) {
        const std::uint64_t begin = n_trials * chunk / n_chunks;
        const std::uint64_t end = n_trials * (chunk + 1) / n_chunks;
        for (std::uint64_t i = begin; i < end; ++i) {
            if (duty < 1.0 && !(Rng(master_seed, Stream::duty, i).uniform() < duty)) continue;
            ++kept[chunk];
            Rng rng(master_seed, Stream::trial, i);
            auto recs = engine.run_trial(static_cast<std::uint32_t>(i), rng);
            parts[chunk].insert(parts[chunk].end(), recs.begin(), recs.end());
        }
    };

    if (n_chunks == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_chunks);
        for (std::uint64_t c = 0; c < n_chunks; ++c) pool.emplace_back(work, c);
        for (auto& t : pool) t.join();
    }

    TimeTagStream stream;
    stream.n_trials = n_trials;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    stream.records.reserve(total);
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
        stream.records.insert(stream.records.end(), parts[c].begin(), parts[c].end());
        stream.kept_trials += kept[c];
    }
    return stream;
}

Histogram decay_histogram(const TimeTagStream& stream, double bin_us, double window_us) {
    require(bin_us > 0.0 && window_us > 0.0, "decay_histogram: bin and window must be > 0");
    const double ratio = window_us / bin_us;
    const auto n_bins = static_cast<std::size_t>(std::llround(ratio));
    require(n_bins >= 1 && std::abs(ratio - static_cast<double>(n_bins)) < 1e-9 * ratio,
            "decay_histogram: bin width must divide the window");
    Histogram h;
    h.counts.assign(n_bins, 0.0);
    h.bin_centers_us.resize(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) h.bin_centers_us[i] = (static_cast<double>(i) + 0.5) * bin_us;
    for (const auto& r : stream.records) {
        if (r.channel != 0) continue;
        const double t_us = static_cast<double>(r.time_ps) * 1e-6;
        const auto bin = static_cast<std::size_t>(std::floor(t_us / bin_us));
        if (bin < n_bins) h.counts[bin] += 1.0;
    }
    return h;
}

SpectrumScan scan_excitation(const Scenario& scenario, std::span<const double> freq_grid_hz,
                             std::uint64_t trials_per_point, std::uint64_t seed, unsigned threads) {
    require(!freq_grid_hz.empty(), "scan_excitation: frequency grid is empty");
    SpectrumScan scan;
    Scenario s = scenario;
    for (std::size_t i = 0; i < freq_grid_hz.size(); ++i) {
        s.excitation_freq_hz = freq_grid_hz[i];
        const auto stream = run_sequence(s, trials_per_point, derive_seed(seed, kScanTag, i), threads);
        std::uint64_t counts = 0;
        for (const auto& r : stream.records) counts += r.channel == 0 ? 1 : 0;
        const auto kept = stream.kept_trials;
        const double n = static_cast<double>(std::max<std::uint64_t>(kept, 1));
        const double p = static_cast<double>(counts) / n;
        const double pf = std::min(std::max(static_cast<double>(counts), 1.0) / n, 1.0);
        scan.freq_hz.push_back(freq_grid_hz[i]);
        scan.p_det.push_back(p);
        scan.err.push_back(std::sqrt(std::max(pf * (1.0 - pf), 1.0 / n) / n));
        scan.counts.push_back(counts);
        scan.trials.push_back(kept);
    }
    return scan;
}

std::vector<double> linear_grid(double center_hz, double half_span_hz, std::size_t points) {
    require(points >= 1, "linear_grid: need at least one point");
    if (points == 1) return {center_hz};
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = center_hz - half_span_hz + 2.0 * half_span_hz * static_cast<double>(i) /
                                              static_cast<double>(points - 1);
    return g;
}

std::vector<SaturationPoint> saturation_series(const Scenario& scenario, std::span<const double> power_grid_w,
                                               std::uint64_t trials_per_point, std::uint64_t seed,
                                               const SaturationOptions& options) {
    require(!power_grid_w.empty(), "saturation_series: power grid is empty");
    require(!scenario.particle.ions.empty(), "saturation_series: scenario has no reference ion");
    const auto& ref = scenario.particle.ions.at(scenario.reference_ion);
    const double center = ref.center_freq_hz + ref.sd_offset_hz;
    const double width0 = scenario.b_field_mt != 0.0 ? ref.hom_fwhm_hz * scenario.zeeman_narrowing : ref.hom_fwhm_hz;

    std::vector<SaturationPoint> out;
    Scenario s = scenario;
    for (std::size_t j = 0; j < power_grid_w.size(); ++j) {
        const double p = power_grid_w[j];
        require(p > 0.0, "saturation_series: powers must be > 0");
        s.excitation_power_w = p;
        const double expected = width0 * std::sqrt(1.0 + p / scenario.p_sat_w);
        const auto grid = linear_grid(center, options.half_span_fwhm * expected, options.points_per_scan);
        const auto scan = scan_excitation(s, grid, trials_per_point, derive_seed(seed, kSaturationTag, j),
                                          options.threads);
        const auto f = estimators::fit_lorentzian(scan, 1);
        out.push_back({p, f.amplitudes[0], f.amplitudes_err[0], f.fwhms[0], f.fwhms_err[0], f.fit.converged});
    }
    return out;
}

double intracavity_photons(const Scenario& s, double power_w) {
    const auto g = cavity::mode_geometry(s.cavity);
    const double loss = s.cavity.loss_ppm + s.particle.scatter_loss_ppm;
    const double finesse = cavity::finesse_from_losses(s.cavity.t_fiber_ppm, s.cavity.t_flat_ppm, loss);
    const double kappa = 2.0 * pi * g.fsr_hz / finesse;
    const double kappa_ext = kappa * cavity::escape_efficiency(s.cavity, s.particle.scatter_loss_ppm);
    const double omega = 2.0 * pi * constants::speed_of_light / (s.cavity.wavelength_nm * 1e-9);
    const double photon_flux = s.chain.mode_match * power_w / (constants::planck_reduced * omega);
    return 4.0 * kappa_ext * photon_flux / (kappa * kappa);
}

}  // namespace ercav::photo
