#include <benchmark/benchmark.h>

#include <sstream>

#include "ercav/ensemble.hpp"
#include "ercav/estimators.hpp"
#include "ercav/g2.hpp"
#include "ercav/photodynamics.hpp"
#include "ercav/timetags.hpp"

namespace {

using namespace ercav;

void BM_TrialSingleIon(benchmark::State& state) {
    const photo::TrialEngine engine(photo::reference_scenario());
    std::uint32_t i = 0;
    for (auto _ : state) {
        Rng rng(1, Stream::trial, i);
        benchmark::DoNotOptimize(engine.run_trial(i++, rng));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrialSingleIon);

void BM_TrialSampledParticle(benchmark::State& state) {
    ensemble::ParticleSpec spec;
    spec.diameter_mean_nm = 170.0;
    spec.diameter_sd_nm = 0.0;
    auto s = photo::reference_scenario();
    s.particle = ensemble::sample_nanoparticle(spec, 7);
    s.excitation_freq_hz = spec.inhom_center_hz;
    const photo::TrialEngine engine(s);
    std::uint32_t i = 0;
    for (auto _ : state) {
        Rng rng(1, Stream::trial, i);
        benchmark::DoNotOptimize(engine.run_trial(i++, rng));
    }
    state.counters["ions"] = static_cast<double>(s.particle.ions.size());
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrialSampledParticle);

void BM_RunSequence(benchmark::State& state) {
    const auto s = photo::reference_scenario();
    for (auto _ : state) {
        benchmark::DoNotOptimize(photo::run_sequence(s, 1'000'000, 3, static_cast<unsigned>(state.range(0))));
    }
    state.SetItemsProcessed(state.iterations() * 1'000'000);
}
BENCHMARK(BM_RunSequence)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_LorentzianFit(benchmark::State& state) {
    photo::SpectrumScan scan;
    for (int i = 0; i < 61; ++i) {
        const double d = -8e6 + 16e6 * i / 60.0;
        scan.freq_hz.push_back(195.3e12 + d);
        scan.p_det.push_back(5e-4 + 0.005 * 1.21e12 / (d * d + 1.21e12));
        scan.err.push_back(1e-4);
    }
    for (auto _ : state) benchmark::DoNotOptimize(estimators::fit_lorentzian(scan, 1));
}
BENCHMARK(BM_LorentzianFit);

void BM_G2Pulsed(benchmark::State& state) {
    auto s = photo::reference_scenario();
    s.chain = photo::DetectionChain::g2_preset();
    s.excitation_power_w = 34.2e-12;
    const auto stream = photo::run_sequence(s, 5'000'000, 7);
    estimators::G2Options o;
    o.errors = state.range(0) ? estimators::G2Errors::bootstrap : estimators::G2Errors::propagation;
    for (auto _ : state) benchmark::DoNotOptimize(estimators::g2_pulsed(stream, s.timing, o));
    state.counters["records"] = static_cast<double>(stream.records.size());
}
BENCHMARK(BM_G2Pulsed)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TimeTagRoundTrip(benchmark::State& state) {
    auto s = photo::reference_scenario();
    s.chain.dark_rate_hz = 2000.0;
    const auto stream = photo::run_sequence(s, 2'000'000, 5);
    for (auto _ : state) {
        std::ostringstream os(std::ios::binary);
        write_timetags(stream, os);
        std::istringstream is(os.str(), std::ios::binary);
        benchmark::DoNotOptimize(read_timetags(is));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(stream.records.size() * kTimeTagRecordBytes));
}
BENCHMARK(BM_TimeTagRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
