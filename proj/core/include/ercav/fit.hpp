#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ercav::fit {

/// Parametric curve y = f(x; theta) with an optional analytic gradient d f / d theta.
struct Model {
    std::vector<std::string> names;
    std::function<double(double, std::span<const double>)> value;
    std::function<void(double, std::span<const double>, std::span<double>)> gradient;

    [[nodiscard]] std::size_t size() const { return names.size(); }
};

struct FitOptions {
    int max_iterations = 200;
    /// Relative step (Jacobian-scaled norm) and relative cost change thresholds.
    double tolerance = 1e-8;
    double initial_damping = 1e-3;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> params;
    /// Row-major n x n; NaN entries when the normal matrix is singular.
    std::vector<double> covariance;
    double chi2 = 0.0;
    double residual_norm = 0.0;  // sqrt(chi2)
    std::size_t dof = 0;
    int iterations = 0;
    bool converged = false;
    std::string message;

    [[nodiscard]] std::size_t index(std::string_view name) const;
    [[nodiscard]] double value(std::string_view name) const { return params[index(name)]; }
    [[nodiscard]] double error(std::size_t i) const;
    [[nodiscard]] double error(std::string_view name) const { return error(index(name)); }
    [[nodiscard]] double cov(std::size_t i, std::size_t j) const {
        return covariance[i * params.size() + j];
    }
    [[nodiscard]] double reduced_chi2() const {
        return dof > 0 ? chi2 / static_cast<double>(dof) : 0.0;
    }
};

/**
 * Weighted nonlinear least squares by Levenberg-Marquardt.
 *
 * Minimizes sum(((y - f(x; theta)) / sigma)^2). Converged when both the
 * Jacobian-scaled relative step and the relative cost change fall below
 * `options.tolerance`, or the cost reaches zero. A singular normal matrix at
 * the solution clears `converged` and leaves NaN in the covariance; the
 * parameters are still returned.
 *
 * Throws InputError on NaN data, non-positive sigma, or fewer points than parameters.
 */
[[nodiscard]] FitResult fit_least_squares(const Model& model, std::span<const double> x,
                                          std::span<const double> y, std::span<const double> sigma,
                                          std::vector<double> init, const FitOptions& options = {});

/// Central finite-difference gradient of the model at (x, params).
[[nodiscard]] std::vector<double> numeric_gradient(const Model& model, double x,
                                                   std::span<const double> params,
                                                   double rel_step = 1e-6);

namespace models {

/// p0 + p1 x
[[nodiscard]] Model linear();
/// amplitude exp(-x / lifetime) + background
[[nodiscard]] Model exponential_decay();
/// offset + sum_k amplitude_k (w_k/2)^2 / ((x - c_k)^2 + (w_k/2)^2); params offset, then (amplitude, center, fwhm) per peak
[[nodiscard]] Model lorentzian(int n_peaks);
/// p_max S / (1 + S), S = x / p_sat
[[nodiscard]] Model saturation_rate();
/// linewidth0 sqrt(1 + x / p_sat)
[[nodiscard]] Model saturation_linewidth();
/// offset + amplitude exp(-4 ln2 (x - center)^2 / fwhm^2)
[[nodiscard]] Model gaussian();

}  // namespace models
}  // namespace ercav::fit
