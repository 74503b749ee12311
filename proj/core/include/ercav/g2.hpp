#pragma once

#include <cstdint>
#include <vector>

#include "ercav/photodynamics.hpp"
#include "ercav/timetags.hpp"

namespace ercav::estimators {

enum class G2Errors { propagation, bootstrap };

enum class G2Normalization {
    /// Divide by <n>^2 over kept trials.
    mean_square,
    /// Divide by the mean unnormalized correlation over lags [10, max_lag].
    far_lags,
};

struct G2Options {
    std::size_t max_lag = 50;
    /// Trial indices spanned by the stream; 0 takes stream.n_trials, else the last index + 1.
    std::uint64_t n_trials = 0;
    /// Fraction of trials that survived the duty cycle; 0 takes it from the stream
    /// bookkeeping when present, else from timing.duty_cycle.
    double kept_fraction = 0.0;
    G2Errors errors = G2Errors::propagation;
    G2Normalization normalization = G2Normalization::mean_square;
    std::size_t bootstrap_resamples = 1000;
    std::uint64_t bootstrap_seed = 0;
};

/// Lags are trial offsets 0..max_lag; lag k is a delay of k / rep_rate.
struct G2Series {
    std::vector<int> lags;
    std::vector<double> values;
    std::vector<double> errors;
    double mean_counts = 0.0;  // per kept trial
    std::uint64_t n_trials = 0;
    double kept_fraction = 1.0;
};

/**
 * Pulsed single-detector autocorrelation from per-trial channel-0 counts:
 * g2(0) = <n(n-1)> / <n>^2, g2(k) = <n_i n_{i+k}> / <n>^2.
 *
 * Dropped trials are indistinguishable from empty ones in the stream, which
 * inflates g2(0) by 1/kept_fraction; the estimate is scaled back. Lags k > 0
 * are unaffected. Throws InputError for an empty stream or zero mean counts.
 */
[[nodiscard]] G2Series g2_pulsed(const TimeTagStream& stream, const photo::ProtocolTiming& timing,
                                 const G2Options& options = {});

/// g2(0) of a Bernoulli(p_signal) single-photon source plus Poisson(mu_dark)
/// background: 1 - rho^2 with rho = p / (p + mu).
[[nodiscard]] double g2_background_prediction(double p_signal, double mu_dark);

}  // namespace ercav::estimators
