#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "ercav/error.hpp"
#include "ercav/photodynamics.hpp"

namespace ercav::photo {
namespace {

std::uint64_t count_channel0(const TimeTagStream& s) {
    return static_cast<std::uint64_t>(
        std::count_if(s.records.begin(), s.records.end(), [](const auto& r) { return r.channel == 0; }));
}

// Reference ion with a pulse long enough to reach the steady state.
Scenario steady_scenario(double s_param) {
    Scenario s = reference_scenario();
    s.timing.pulse_us = 2000.0;
    s.timing.window_us = 500.0;
    s.timing.rep_rate_hz = 400.0;
    s.timing.duty_cycle = 1.0;
    s.excitation_power_w = s_param * s.p_sat_w;
    return s;
}

double closed_form_p_max(const Scenario& s) {
    const double gamma = (1.0 + s.purcell_peak) / s.natural_lifetime_s;
    const double beta = s.purcell_peak / (1.0 + s.purcell_peak);
    return 0.5 * -std::expm1(-gamma * s.timing.window_us * 1e-6) * beta * s.chain.overall();
}

TEST(PumpRate, Examples) {
    const double gamma = 1.0 / 350e-6;
    EXPECT_DOUBLE_EQ(pump_rate(10.7e-12, 0.0, 2.2e6, 10.7e-12, gamma), gamma / 2.0);
    EXPECT_DOUBLE_EQ(pump_rate(10.7e-12, 1.1e6, 2.2e6, 10.7e-12, gamma), gamma / 4.0);
    EXPECT_EQ(pump_rate(0.0, 0.0, 2.2e6, 10.7e-12, gamma), 0.0);
    EXPECT_THROW((void)pump_rate(-1.0, 0.0, 2.2e6, 10.7e-12, gamma), InvalidParameter);
}

TEST(ExcitedPopulation, Examples) {
    const double gamma = 1.0 / 350e-6;
    EXPECT_EQ(excited_population(0.0, gamma, 1.0), 0.0);
    EXPECT_NEAR(excited_population(gamma / 2.0, gamma, 200e-6), 0.25 * (1.0 - std::exp(-200.0 / 175.0)), 1e-15);
    EXPECT_NEAR(excited_population(gamma / 2.0, gamma, 200e-6), 0.170, 5e-4);
    EXPECT_NEAR(excited_population(1e12, gamma, 1.0), 0.5, 1e-9);
}

TEST(ExcitedPopulation, BoundedByHalfProperty) {
    for (double w : {0.0, 1.0, 1e2, 1e4, 1e6})
        for (double t : {0.0, 1e-6, 1e-3, 1.0}) {
            const double p = excited_population(w, 1e3, t);
            ASSERT_GE(p, 0.0);
            ASSERT_LE(p, 0.5);
        }
}

TEST(Validation, TimingInvariantNamesProtocolTiming) {
    ProtocolTiming t;
    t.window_us = 600.0;
    try {
        t.validate();
        FAIL() << "expected InvalidParameter";
    } catch (const InvalidParameter& e) {
        EXPECT_NE(std::string(e.what()).find("ProtocolTiming"), std::string::npos);
    }
}

TEST(Validation, ChainEfficiencyOutOfRange) {
    DetectionChain c;
    c.mode_match = 1.5;
    EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(RunTrial, ZeroEfficiencyAndNoDarkGivesEmptyStream) {
    Scenario s = reference_scenario();
    s.chain.detector_efficiency = 0.0;
    s.chain.dark_rate_hz = 0.0;
    s.excitation_power_w = 100.0 * s.p_sat_w;
    EXPECT_TRUE(run_sequence(s, 200000, 1).records.empty());
}

TEST(RunTrial, DarkCountMeanWithoutIons) {
    Scenario s = reference_scenario();
    s.particle.ions.clear();
    s.chain = DetectionChain::g2_preset();
    s.timing.duty_cycle = 1.0;
    const TrialEngine engine(s);
    EXPECT_NEAR(engine.expected_dark_counts(), 7e-4, 1e-15);
    const std::uint64_t n = 2000000;
    const auto stream = run_sequence(s, n, 2);
    const double mean = static_cast<double>(count_channel0(stream)) / n;
    EXPECT_NEAR(mean, 7e-4, 3.0 * std::sqrt(7e-4 / n));
}

TEST(RunTrial, DarkOnlyHistogramIsFlat) {
    Scenario s = reference_scenario();
    s.particle.ions.clear();
    s.chain.dark_rate_hz = 400.0;
    s.timing.duty_cycle = 1.0;
    const auto stream = run_sequence(s, 200000, 3);
    const auto h = decay_histogram(stream, 25.0, s.timing.window_us);
    double total = 0.0;
    for (double c : h.counts) total += c;
    const double expected = total / h.counts.size();
    double chi2 = 0.0;
    for (double c : h.counts) chi2 += (c - expected) * (c - expected) / expected;
    // 19 degrees of freedom; the 99.9th percentile is 43.8.
    EXPECT_LT(chi2, 43.8);
}

TEST(RunTrial, AtMostOneSignalPhotonPerIon) {
    Scenario s = reference_scenario();
    s.chain.dark_rate_hz = 0.0;
    s.chain.detector_efficiency = 1.0;
    s.excitation_power_w = 1000.0 * s.p_sat_w;
    s.timing.duty_cycle = 1.0;
    const auto stream = run_sequence(s, 300000, 4);
    ASSERT_FALSE(stream.records.empty());
    for (std::size_t i = 1; i < stream.records.size(); ++i)
        ASSERT_NE(stream.records[i].trial, stream.records[i - 1].trial);
}

TEST(RunTrial, MultiIonClicksBoundedByIonCount) {
    Scenario s = reference_scenario();
    s.particle = ensemble::sample_nanoparticle(ensemble::ParticleSpec{}, 5);
    s.chain.dark_rate_hz = 0.0;
    s.chain.detector_efficiency = 1.0;
    s.excitation_power_w = 1e3 * s.p_sat_w;
    s.excitation_freq_hz = 195.30e12;
    const auto stream = run_sequence(s, 2000, 5);
    std::map<std::uint32_t, std::size_t> per_trial;
    for (const auto& r : stream.records) ++per_trial[r.trial];
    for (const auto& [trial, n] : per_trial) ASSERT_LE(n, s.particle.ions.size());
}

TEST(RunSequence, SingleTrialMatchesRunTrial) {
    Scenario s = reference_scenario();
    s.timing.duty_cycle = 1.0;
    s.chain.dark_rate_hz = 2000.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed, Stream::trial, 0);
        const auto direct = run_trial(s, 0, rng);
        const auto seq = run_sequence(s, 1, seed);
        ASSERT_EQ(seq.records, direct);
    }
}

TEST(RunSequence, IdenticalForAnyThreadCount) {
    Scenario s = reference_scenario();
    s.excitation_power_w = 5.0 * s.p_sat_w;
    const auto a = run_sequence(s, 100001, 6, 1);
    const auto b = run_sequence(s, 100001, 6, 8);
    EXPECT_EQ(a.records, b.records);
    EXPECT_EQ(a.kept_trials, b.kept_trials);
    EXPECT_EQ(a.n_trials, b.n_trials);
}

TEST(RunSequence, DutyCycleKeepsExpectedFraction) {
    const Scenario s = reference_scenario();
    const std::uint64_t n = 200000;
    const auto stream = run_sequence(s, n, 7);
    const double frac = static_cast<double>(stream.kept_trials) / n;
    EXPECT_NEAR(frac, 0.7, 3.0 * std::sqrt(0.21 / n));
}

TEST(RunSequence, StreamInvariantsHold) {
    Scenario s = reference_scenario();
    s.chain.dark_rate_hz = 5000.0;
    s.chain.dead_time_ns = 20000.0;
    s.excitation_power_w = 50.0 * s.p_sat_w;
    const auto stream = run_sequence(s, 50000, 8, 3);
    EXPECT_EQ(check_stream_invariants(stream, 500000000ULL, 20000000ULL), "");
}

TEST(RunSequence, CountsMatchBinomialExpectation) {
    const Scenario s = reference_scenario();
    const TrialEngine engine(s);
    const std::uint64_t n = 1000000;
    const auto stream = run_sequence(s, n, 9);
    const double p = engine.expected_signal_probability() + engine.expected_dark_counts();
    const double kept = static_cast<double>(stream.kept_trials);
    const double expected = kept * p;
    EXPECT_NEAR(static_cast<double>(count_channel0(stream)), expected, 3.0 * std::sqrt(expected));
}

TEST(RunSequence, RejectsZeroTrials) {
    EXPECT_THROW((void)run_sequence(reference_scenario(), 0, 1), InvalidParameter);
}

TEST(Monotonicity, ExpectedProbabilityInPowerAndEfficiency) {
    Scenario s = reference_scenario();
    double last = -1.0;
    for (double p : {0.0, 1e-12, 5e-12, 2e-11, 1e-10, 1e-9}) {
        s.excitation_power_w = p;
        const double v = TrialEngine(s).expected_signal_probability();
        ASSERT_GE(v, last);
        last = v;
    }
    s = reference_scenario();
    last = -1.0;
    for (double e : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        s.chain.path_efficiency = e;
        const double v = TrialEngine(s).expected_signal_probability();
        ASSERT_GE(v, last);
        last = v;
    }
}

TEST(Monotonicity, CommonRandomNumbersNeverLoseClicks) {
    Scenario lo = reference_scenario();
    lo.chain.dark_rate_hz = 0.0;
    Scenario hi = lo;
    hi.excitation_power_w = 4.0 * lo.excitation_power_w;
    hi.chain.detector_efficiency = 0.95;
    const auto a = run_sequence(lo, 100000, 10);
    const auto b = run_sequence(hi, 100000, 10);
    EXPECT_GE(b.records.size(), a.records.size());
    std::size_t j = 0;
    for (const auto& r : a.records) {
        while (j < b.records.size() && b.records[j].trial < r.trial) ++j;
        ASSERT_LT(j, b.records.size());
        ASSERT_EQ(b.records[j].trial, r.trial);
    }
}

TEST(SteadyState, PeakRateMatchesClosedForm) {
    for (double s_param : {0.3, 1.0, 10.0}) {
        const Scenario s = steady_scenario(s_param);
        const double p_closed = s_param / (1.0 + s_param) * closed_form_p_max(s);
        const TrialEngine engine(s);
        EXPECT_NEAR(engine.expected_signal_probability(), p_closed, 1e-9 * p_closed);

        Scenario quiet = s;
        quiet.chain.dark_rate_hz = 0.0;
        const std::uint64_t n = 400000;
        const double counts = static_cast<double>(count_channel0(run_sequence(quiet, n, 11)));
        const double sigma = std::sqrt(n * p_closed * (1.0 - p_closed));
        EXPECT_NEAR(counts, n * p_closed, 3.0 * sigma) << "S = " << s_param;
    }
}

TEST(SteadyState, AsymptoteIsOnePercent) {
    const Scenario s = steady_scenario(1e4);
    EXPECT_NEAR(TrialEngine(s).expected_signal_probability(), 0.01, 0.001);
}

TEST(SteadyState, PowerBroadeningFollowsSquareRootLaw) {
    for (double s_param : {0.1, 1.0, 10.0}) {
        Scenario s = steady_scenario(s_param);
        const double f0 = s.excitation_freq_hz;
        const double peak = TrialEngine(s).expected_signal_probability();
        double lo = 0.0, hi = 1e9;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            s.excitation_freq_hz = f0 + mid;
            (TrialEngine(s).expected_signal_probability() > 0.5 * peak ? lo : hi) = mid;
        }
        EXPECT_NEAR(2.0 * lo, 2.2e6 * std::sqrt(1.0 + s_param), 1.0) << "S = " << s_param;
    }
}

TEST(DecayHistogram, SingleRecordLandsInThirdBin) {
    TimeTagStream s;
    s.records.push_back({0, 0, 10000000ULL});
    const auto h = decay_histogram(s, 5.0, 500.0);
    ASSERT_EQ(h.counts.size(), 100u);
    EXPECT_EQ(h.counts[2], 1.0);
    EXPECT_DOUBLE_EQ(h.bin_centers_us[2], 12.5);
}

TEST(DecayHistogram, EmptyStreamAllZeroAndBadBinRejected) {
    const auto h = decay_histogram(TimeTagStream{}, 5.0, 500.0);
    for (double c : h.counts) EXPECT_EQ(c, 0.0);
    EXPECT_THROW((void)decay_histogram(TimeTagStream{}, 3.0, 500.0), InvalidParameter);
}

TEST(LinearGrid, EndpointsAndSinglePoint) {
    const auto g = linear_grid(10.0, 2.0, 5);
    EXPECT_EQ(g.front(), 8.0);
    EXPECT_EQ(g.back(), 12.0);
    EXPECT_EQ(g[2], 10.0);
    EXPECT_EQ(linear_grid(3.0, 1.0, 1), std::vector<double>{3.0});
}

TEST(Diagnostics, IntracavityPhotonsFromInputFlux) {
    const Scenario s = reference_scenario();
    const double n = intracavity_photons(s, s.p_sat_w);
    // kappa = 2 pi FSR / F with the particle loss, kappa_ext = kappa 100 / 314, flux = 0.135 P / (hbar omega).
    const double kappa = 2.0 * M_PI * 24982704833333.33 / (2.0 * M_PI / 314e-6);
    const double kappa_ext = kappa * 100.0 / 314.0;
    const double hbar_omega = 1.054571817e-34 * 2.0 * M_PI * 299792458.0 / 1535e-9;
    const double flux = 0.135 * 10.7e-12 / hbar_omega;
    EXPECT_NEAR(n, 4.0 * kappa_ext * flux / (kappa * kappa), 1e-6 * n);
    EXPECT_NEAR(intracavity_photons(s, 2.0 * s.p_sat_w), 2.0 * n, 1e-12 * n);
}

}  // namespace
}  // namespace ercav::photo
