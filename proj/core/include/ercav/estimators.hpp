#pragma once

#include <span>
#include <vector>

#include "ercav/fit.hpp"
#include "ercav/photodynamics.hpp"

namespace ercav::estimators {

struct DecayFit {
    double lifetime_us = 0.0;
    double lifetime_err_us = 0.0;
    double amplitude = 0.0;
    double background = 0.0;
    fit::FitResult fit;
};

/// Fits a exp(-t / T) + b to a histogram with Poisson weights (sigma floored at one count).
/// Throws InputError when fewer than three bins are nonzero.
[[nodiscard]] DecayFit fit_exponential_decay(const photo::Histogram& histogram);

struct LorentzianFit {
    // Peaks are ordered by center frequency.
    std::vector<double> centers;
    std::vector<double> centers_err;
    std::vector<double> fwhms;
    std::vector<double> fwhms_err;
    std::vector<double> amplitudes;
    std::vector<double> amplitudes_err;
    double offset = 0.0;
    double offset_err = 0.0;
    /// |c2 - c1| for two peaks, 0 otherwise.
    double splitting = 0.0;
    double splitting_err = 0.0;
    fit::FitResult fit;
};

/**
 * Single or double Lorentzian on a constant background.
 *
 * Initialization: offset from the mean of the outer 10 % of points on each
 * side, center at the argmax, FWHM from the half-maximum crossing span. For
 * two peaks, the second start point is the tallest other local maximum of the
 * 3-point smoothed data that reaches half the main peak height with a valley
 * between them; otherwise both lines start on top of each other with half the
 * amplitude, which converges to the single-line solution.
 */
[[nodiscard]] LorentzianFit fit_lorentzian(std::span<const double> x, std::span<const double> y,
                                           std::span<const double> sigma, int n_peaks);
[[nodiscard]] LorentzianFit fit_lorentzian(const photo::SpectrumScan& scan, int n_peaks);

/// Gaussian envelope of a wide inhomogeneous scan. When the scan carries trial counts the
/// fit is repeated with binomial errors of the fitted curve rather than of the data.
[[nodiscard]] fit::FitResult fit_gaussian_envelope(const photo::SpectrumScan& scan);

struct PowerPoint {
    double power_w = 0.0;
    double value = 0.0;
    double sigma = 0.0;
};

struct SaturationRateFit {
    double p_max = 0.0;
    double p_max_err = 0.0;
    double p_sat_w = 0.0;
    double p_sat_err_w = 0.0;
    /// Fewer than three powers, or every power more than a decade on one side of P_sat.
    bool degenerate = false;
    fit::FitResult fit;
};

struct SaturationLinewidthFit {
    double linewidth0_hz = 0.0;
    double linewidth0_err_hz = 0.0;
    double p_sat_w = 0.0;
    double p_sat_err_w = 0.0;
    bool degenerate = false;
    fit::FitResult fit;
};

[[nodiscard]] SaturationRateFit fit_saturation_rate(std::span<const PowerPoint> points);
[[nodiscard]] SaturationLinewidthFit fit_saturation_linewidth(std::span<const PowerPoint> points);

}  // namespace ercav::estimators
