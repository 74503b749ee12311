#include "ercav/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ercav/error.hpp"

namespace ercav::estimators {
namespace {

std::vector<double> smooth3(std::span<const double> y) {
    std::vector<double> s(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t lo = i > 0 ? i - 1 : i;
        const std::size_t hi = i + 1 < y.size() ? i + 1 : i;
        s[i] = (y[lo] + y[i] + y[hi]) / 3.0;
    }
    return s;
}

double edge_mean(std::span<const double> y) {
    const std::size_t k = std::max<std::size_t>(1, y.size() / 10);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += y[i] + y[y.size() - 1 - i];
    return sum / static_cast<double>(2 * k);
}

/// Distance from the peak at `i` to where y falls below `level`, walking in direction `dir`.
/// Returns a negative value if the level is never crossed.
double half_crossing(std::span<const double> x, std::span<const double> y, std::size_t i, double level,
                     int dir) {
    std::size_t j = i;
    while (true) {
        if (dir < 0 && j == 0) return -1.0;
        if (dir > 0 && j + 1 >= y.size()) return -1.0;
        const std::size_t k = dir < 0 ? j - 1 : j + 1;
        if (y[k] < level) {
            const double t = (y[j] - level) / (y[j] - y[k]);
            return std::abs(x[j] + t * (x[k] - x[j]) - x[i]);
        }
        j = k;
    }
}

double width_estimate(std::span<const double> x, std::span<const double> y, std::size_t i, double level,
                      double fallback) {
    const double left = half_crossing(x, y, i, level, -1);
    const double right = half_crossing(x, y, i, level, +1);
    if (left > 0.0 && right > 0.0) return left + right;
    if (left > 0.0) return 2.0 * left;
    if (right > 0.0) return 2.0 * right;
    return fallback;
}

void check_xy(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
    if (x.size() != y.size() || x.size() != sigma.size())
        throw InputError("estimator: x, y and sigma must have equal length");
}

/// Weighted linear regression y = a + b x; returns false if degenerate.
bool linear_regression(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                       double& a, double& b) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) return false;
    b = (sw * sxy - sx * sy) / det;
    a = (sy - b * sx) / sw;
    return std::isfinite(a) && std::isfinite(b);
}

struct Scaled {
    std::vector<double> x, y, sigma;
    double scale = 1.0;
};

/// Power points in units of the median power, sorted by power.
Scaled scale_powers(std::span<const PowerPoint> points) {
    if (points.size() < 2) throw InputError("saturation fit: need at least two power points");
    std::vector<PowerPoint> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.power_w < b.power_w; });
    Scaled s;
    s.scale = pts[pts.size() / 2].power_w;
    if (!(s.scale > 0.0)) throw InputError("saturation fit: powers must be > 0");
    for (const auto& p : pts) {
        if (!(p.power_w > 0.0)) throw InputError("saturation fit: powers must be > 0");
        s.x.push_back(p.power_w / s.scale);
        s.y.push_back(p.value);
        s.sigma.push_back(p.sigma);
    }
    return s;
}

bool is_degenerate(const Scaled& s, double p_sat_scaled, const fit::FitResult& r) {
    if (s.x.size() < 3 || !r.converged || !(p_sat_scaled > 0.0)) return true;
    return s.x.back() < 0.1 * p_sat_scaled || s.x.front() > 10.0 * p_sat_scaled;
}

}  // namespace

DecayFit fit_exponential_decay(const photo::Histogram& h) {
    const auto& t = h.bin_centers_us;
    const auto& y = h.counts;
    if (t.size() != y.size()) throw InputError("fit_exponential_decay: malformed histogram");
    const auto nonzero = std::count_if(y.begin(), y.end(), [](double c) { return c > 0.0; });
    if (nonzero < 3) throw InputError("fit_exponential_decay: need at least three nonzero bins");

    std::vector<double> sigma(y.size());
    std::transform(y.begin(), y.end(), sigma.begin(), [](double c) { return std::sqrt(std::max(c, 1.0)); });

    const std::size_t tail = std::max<std::size_t>(1, y.size() / 10);
    const double b0 = std::accumulate(y.end() - static_cast<std::ptrdiff_t>(tail), y.end(), 0.0) /
                      static_cast<double>(tail);
    double a0 = y.front() - b0;
    if (!(a0 > 0.0)) a0 = *std::max_element(y.begin(), y.end()) - b0;
    if (!(a0 > 0.0)) a0 = 1.0;
    double tau0 = t.back() - t.front();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] - b0 < a0 / std::exp(1.0)) {
            tau0 = std::max(t[i] - t.front(), 0.5 * (t.size() > 1 ? t[1] - t[0] : 1.0));
            break;
        }
    }
    a0 *= std::exp(t.front() / tau0);

    DecayFit out;
    out.fit = fit::fit_least_squares(fit::models::exponential_decay(), t, y, sigma, {a0, tau0, b0});
    out.amplitude = out.fit.params[0];
    out.lifetime_us = out.fit.params[1];
    out.background = out.fit.params[2];
    out.lifetime_err_us = out.fit.error(1);
    return out;
}

LorentzianFit fit_lorentzian(std::span<const double> x_in, std::span<const double> y,
                             std::span<const double> sigma, int n_peaks) {
    if (n_peaks != 1 && n_peaks != 2) throw InvalidParameter("fit_lorentzian: n_peaks must be 1 or 2");
    check_xy(x_in, y, sigma);
    const std::size_t min_points = 4 + 3 * static_cast<std::size_t>(n_peaks - 1);
    if (x_in.size() < min_points) throw InputError("fit_lorentzian: too few scan points");

    // Fit on a centered, unit-span axis; absolute optical frequencies are ~1e14 Hz.
    const auto [xmin_it, xmax_it] = std::minmax_element(x_in.begin(), x_in.end());
    const double mid = 0.5 * (*xmin_it + *xmax_it);
    const double scale = *xmax_it > *xmin_it ? 0.5 * (*xmax_it - *xmin_it) : 1.0;
    std::vector<double> x(x_in.size());
    std::transform(x_in.begin(), x_in.end(), x.begin(), [&](double v) { return (v - mid) / scale; });
    const double step = x.size() > 1 ? std::abs(x[1] - x[0]) : 1.0;

    const double off0 = edge_mean(y);
    const std::vector<double> ys = smooth3(y);
    const auto i1 = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    const double a_main = y[i1] - off0;
    const double w_main = std::max(width_estimate(x, y, i1, off0 + 0.5 * a_main, 0.25), step);

    std::vector<double> init{off0};
    if (n_peaks == 1) {
        init.insert(init.end(), {a_main, x[i1], w_main});
    } else {
        const auto j1 = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());
        const double h1 = ys[j1] - off0;
        std::size_t best = ys.size();
        for (std::size_t k = 1; k + 1 < ys.size(); ++k) {
            if (k == j1 || ys[k] < ys[k - 1] || ys[k] < ys[k + 1]) continue;
            const double hk = ys[k] - off0;
            if (hk < 0.5 * h1) continue;
            const auto [lo, hi] = std::minmax(j1, k);
            const double valley = *std::min_element(ys.begin() + static_cast<std::ptrdiff_t>(lo),
                                                    ys.begin() + static_cast<std::ptrdiff_t>(hi) + 1) - off0;
            if (valley > 0.8 * hk) continue;
            if (best == ys.size() || ys[k] > ys[best]) best = k;
        }
        if (best != ys.size()) {
            const double wa = std::max(width_estimate(x, ys, j1, off0 + 0.5 * h1, 0.1), step);
            const double hb = ys[best] - off0;
            const double wb = std::max(width_estimate(x, ys, best, off0 + 0.5 * hb, 0.1), step);
            init.insert(init.end(), {h1, x[j1], wa, hb, x[best], wb});
        } else {
            init.insert(init.end(), {0.5 * a_main, x[i1], w_main, 0.5 * a_main, x[i1], w_main});
        }
    }

    LorentzianFit out;
    out.fit = fit::fit_least_squares(fit::models::lorentzian(n_peaks), x, y, sigma, init);
    auto& r = out.fit;

    // Back to the caller's axis: centers shift and scale, widths scale.
    const std::size_t n = r.params.size();
    std::vector<double> jac(n, 1.0);
    for (int k = 0; k < n_peaks; ++k) {
        r.params[2 + 3 * k] = mid + scale * r.params[2 + 3 * k];
        r.params[3 + 3 * k] = std::abs(r.params[3 + 3 * k]) * scale;
        jac[2 + 3 * k] = scale;
        jac[3 + 3 * k] = scale;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r.covariance[i * n + j] *= jac[i] * jac[j];

    std::vector<int> order(static_cast<std::size_t>(n_peaks));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return r.params[2 + 3 * a] < r.params[2 + 3 * b]; });
    out.offset = r.params[0];
    out.offset_err = r.error(0);
    for (const int k : order) {
        const auto base = static_cast<std::size_t>(1 + 3 * k);
        out.amplitudes.push_back(r.params[base]);
        out.amplitudes_err.push_back(r.error(base));
        out.centers.push_back(r.params[base + 1]);
        out.centers_err.push_back(r.error(base + 1));
        out.fwhms.push_back(r.params[base + 2]);
        out.fwhms_err.push_back(r.error(base + 2));
    }
    if (n_peaks == 2) {
        out.splitting = out.centers[1] - out.centers[0];
        const double var = r.cov(2, 2) + r.cov(5, 5) - 2.0 * r.cov(2, 5);
        out.splitting_err = var >= 0.0 ? std::sqrt(var) : std::nan("");
    }
    return out;
}

LorentzianFit fit_lorentzian(const photo::SpectrumScan& scan, int n_peaks) {
    return fit_lorentzian(scan.freq_hz, scan.p_det, scan.err, n_peaks);
}

fit::FitResult fit_gaussian_envelope(const photo::SpectrumScan& scan) {
    check_xy(scan.freq_hz, scan.p_det, scan.err);
    const std::span<const double> x_in = scan.freq_hz;
    const std::span<const double> y = scan.p_det;
    if (x_in.size() < 5) throw InputError("fit_gaussian_envelope: too few scan points");
    const auto [xmin_it, xmax_it] = std::minmax_element(x_in.begin(), x_in.end());
    const double mid = 0.5 * (*xmin_it + *xmax_it);
    const double scale = *xmax_it > *xmin_it ? 0.5 * (*xmax_it - *xmin_it) : 1.0;
    std::vector<double> x(x_in.size());
    std::transform(x_in.begin(), x_in.end(), x.begin(), [&](double v) { return (v - mid) / scale; });

    // Moments of the background-subtracted profile.
    const double off0 = edge_mean(y);
    double s0 = 0, s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = std::max(y[i] - off0, 0.0);
        s0 += w;
        s1 += w * x[i];
    }
    if (!(s0 > 0.0)) throw InputError("fit_gaussian_envelope: no signal above background");
    const double c0 = s1 / s0;
    for (std::size_t i = 0; i < x.size(); ++i) s2 += std::max(y[i] - off0, 0.0) * (x[i] - c0) * (x[i] - c0);
    const double w0 = 2.3548200450309493 * std::sqrt(s2 / s0);
    const std::vector<double> ys = smooth3(y);
    const double a0 = *std::max_element(ys.begin(), ys.end()) - off0;

    const auto model = fit::models::gaussian();
    fit::FitResult r = fit::fit_least_squares(model, x, y, scan.err, {off0, a0, c0, w0});

    // Wide scans hold only a few counts per point, where errors taken from the
    // observed counts pull the fit toward low points. Refit with binomial errors
    // of the fitted curve instead (Pearson weighting) when trial counts are known.
    const bool have_trials = scan.trials.size() == y.size() &&
                             std::all_of(scan.trials.begin(), scan.trials.end(), [](auto n) { return n > 0; });
    if (have_trials && r.converged) {
        std::vector<double> sigma(y.size());
        for (int pass = 0; pass < 3; ++pass) {
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double n = static_cast<double>(scan.trials[i]);
                const double m = std::clamp(model.value(x[i], r.params), 0.5 / n, 1.0 - 0.5 / n);
                sigma[i] = std::sqrt(m * (1.0 - m) / n);
            }
            r = fit::fit_least_squares(model, x, y, sigma, r.params);
        }
    }
    const std::size_t n = r.params.size();
    r.params[2] = mid + scale * r.params[2];
    r.params[3] = std::abs(r.params[3]) * scale;
    const std::vector<double> jac{1.0, 1.0, scale, scale};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r.covariance[i * n + j] *= jac[i] * jac[j];
    return r;
}

SaturationRateFit fit_saturation_rate(std::span<const PowerPoint> points) {
    const Scaled s = scale_powers(points);
    // 1/y = 1/p_max + (p_sat/p_max) (1/P), weighted by (y/sigma)^2.
    std::vector<double> ix, iy, w;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!(s.y[i] > 0.0)) continue;
        ix.push_back(1.0 / s.x[i]);
        iy.push_back(1.0 / s.y[i]);
        w.push_back((s.y[i] / s.sigma[i]) * (s.y[i] / s.sigma[i]) * s.y[i] * s.y[i]);
    }
    double pm0 = 1.1 * *std::max_element(s.y.begin(), s.y.end());
    double ps0 = 1.0;
    double a = 0, b = 0;
    if (ix.size() >= 2 && linear_regression(ix, iy, w, a, b) && a > 0.0 && b > 0.0) {
        pm0 = 1.0 / a;
        ps0 = b / a;
    }
    if (!(pm0 > 0.0)) pm0 = 1.0;

    SaturationRateFit out;
    out.fit = fit::fit_least_squares(fit::models::saturation_rate(), s.x, s.y, s.sigma, {pm0, ps0});
    out.degenerate = is_degenerate(s, out.fit.params[1], out.fit);
    out.fit.params[1] *= s.scale;
    out.fit.covariance[1] *= s.scale;
    out.fit.covariance[2] *= s.scale;
    out.fit.covariance[3] *= s.scale * s.scale;
    out.p_max = out.fit.params[0];
    out.p_max_err = out.fit.error(0);
    out.p_sat_w = out.fit.params[1];
    out.p_sat_err_w = out.fit.error(1);
    return out;
}

SaturationLinewidthFit fit_saturation_linewidth(std::span<const PowerPoint> points) {
    const Scaled s = scale_powers(points);
    // w^2 = d0^2 + (d0^2 / p_sat) P.
    std::vector<double> wsq(s.y.size()), weight(s.y.size());
    for (std::size_t i = 0; i < s.y.size(); ++i) {
        wsq[i] = s.y[i] * s.y[i];
        const double sw = 2.0 * s.y[i] * s.sigma[i];
        weight[i] = 1.0 / (sw * sw);
    }
    double d0 = *std::min_element(s.y.begin(), s.y.end());
    double ps0 = 1.0;
    double a = 0, b = 0;
    if (linear_regression(s.x, wsq, weight, a, b) && a > 0.0 && b > 0.0) {
        d0 = std::sqrt(a);
        ps0 = a / b;
    }

    SaturationLinewidthFit out;
    out.fit = fit::fit_least_squares(fit::models::saturation_linewidth(), s.x, s.y, s.sigma, {d0, ps0});
    out.degenerate = is_degenerate(s, out.fit.params[1], out.fit);
    out.fit.params[1] *= s.scale;
    out.fit.covariance[1] *= s.scale;
    out.fit.covariance[2] *= s.scale;
    out.fit.covariance[3] *= s.scale * s.scale;
    out.linewidth0_hz = out.fit.params[0];
    out.linewidth0_err_hz = out.fit.error(0);
    out.p_sat_w = out.fit.params[1];
    out.p_sat_err_w = out.fit.error(1);
    return out;
}

}  // namespace ercav::estimators
