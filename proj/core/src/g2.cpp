#include "ercav/g2.hpp"

#include <algorithm>
#include <cmath>

#include "ercav/error.hpp"
#include "ercav/rng.hpp"

namespace ercav::estimators {
namespace {

struct TrialCount {
    std::uint64_t trial;
    double n;
};

struct PairProduct {
    std::size_t first;  // index into the nonzero-trial list
    std::size_t lag;
    double product;
};

std::vector<TrialCount> per_trial_counts(const TimeTagStream& stream) {
    std::vector<TrialCount> out;
    for (const auto& r : stream.records) {
        if (r.channel != 0) continue;
        if (!out.empty() && out.back().trial == r.trial) {
            out.back().n += 1.0;
        } else {
            if (!out.empty() && r.trial < out.back().trial)
                throw InputError("g2_pulsed: stream is not ordered by trial");
            out.push_back({r.trial, 1.0});
        }
    }
    return out;
}

std::vector<PairProduct> lag_products(const std::vector<TrialCount>& nz, std::size_t max_lag) {
    std::vector<PairProduct> out;
    for (std::size_t i = 0; i < nz.size(); ++i) {
        for (std::size_t j = i + 1; j < nz.size(); ++j) {
            const std::uint64_t lag = nz[j].trial - nz[i].trial;
            if (lag > max_lag) break;
            out.push_back({i, static_cast<std::size_t>(lag), nz[i].n * nz[j].n});
        }
    }
    return out;
}

std::pair<std::size_t, std::size_t> norm_range(std::size_t max_lag) {
    return max_lag >= 10 ? std::pair<std::size_t, std::size_t>{10, max_lag}
                         : std::pair<std::size_t, std::size_t>{1, max_lag};
}

}  // namespace

G2Series g2_pulsed(const TimeTagStream& stream, const photo::ProtocolTiming& timing,
                   const G2Options& options) {
    if (stream.records.empty()) throw InputError("g2_pulsed: stream is empty");
    if (options.max_lag < 1) throw InputError("g2_pulsed: max_lag must be >= 1");

    const auto nz = per_trial_counts(stream);
    if (nz.empty()) throw InputError("g2_pulsed: no channel-0 counts; g2 undefined");

    std::uint64_t n_trials = options.n_trials;
    if (n_trials == 0) n_trials = stream.n_trials;
    if (n_trials == 0) n_trials = nz.back().trial + 1;
    if (nz.back().trial >= n_trials) throw InputError("g2_pulsed: record trial index beyond n_trials");
    if (options.max_lag >= n_trials) throw InputError("g2_pulsed: max_lag must be below the trial count");

    double kept = options.kept_fraction;
    if (!(kept > 0.0)) {
        kept = (stream.n_trials > 0 && stream.kept_trials > 0)
                   ? static_cast<double>(stream.kept_trials) / static_cast<double>(stream.n_trials)
                   : timing.duty_cycle;
    }
    if (!(kept > 0.0 && kept <= 1.0)) throw InputError("g2_pulsed: kept fraction must be in (0, 1]");

    const double N = static_cast<double>(n_trials);
    const std::size_t L = options.max_lag;

    double s1 = 0, s2 = 0, sx = 0, sxx = 0, sxn = 0;
    for (const auto& t : nz) {
        const double x = t.n * (t.n - 1.0);
        s1 += t.n;
        s2 += t.n * t.n;
        sx += x;
        sxx += x * x;
        sxn += x * t.n;
    }
    const double B = s1 / N;
    const double A = sx / N;
    const double var_n = s2 / N - B * B;
    const double var_x = sxx / N - A * A;
    const double cov_xn = sxn / N - A * B;

    const auto pairs = lag_products(nz, L);
    std::vector<double> sz(L + 1, 0.0), szz(L + 1, 0.0), szn(L + 1, 0.0);
    for (const auto& p : pairs) {
        sz[p.lag] += p.product;
        szz[p.lag] += p.product * p.product;
        // z_i (n_i + n_{i+k}) = z (n_i + z / n_i)
        szn[p.lag] += p.product * (nz[p.first].n + p.product / nz[p.first].n);
    }

    // Unnormalized correlations and their delta-method variances with denominator <n>^2.
    std::vector<double> corr(L + 1), value(L + 1), error(L + 1);
    corr[0] = A;
    {
        const double dA = 1.0 / (B * B);
        const double dB = -2.0 * A / (B * B * B);
        const double var = (dA * dA * var_x + dB * dB * var_n + 2.0 * dA * dB * cov_xn) / N;
        value[0] = A / (B * B);
        error[0] = std::sqrt(std::max(var, 0.0));
    }
    for (std::size_t k = 1; k <= L; ++k) {
        const double P = N - static_cast<double>(k);
        const double C = sz[k] / P;
        const double var_z = szz[k] / P - C * C;
        const double cov_zn = szn[k] / P - 2.0 * C * B;
        const double dC = 1.0 / (B * B);
        const double dB = -2.0 * C / (B * B * B);
        const double var = dC * dC * var_z / P + dB * dB * var_n / N + 2.0 * dC * dB * cov_zn / N;
        corr[k] = C;
        value[k] = C / (B * B);
        error[k] = std::sqrt(std::max(var, 0.0));
    }

    if (options.normalization == G2Normalization::far_lags) {
        const auto [lo, hi] = norm_range(L);
        double norm = 0.0, norm_var = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) {
            norm += corr[k];
            norm_var += std::pow(error[k] * B * B, 2);
        }
        const double cnt = static_cast<double>(hi - lo + 1);
        norm /= cnt;
        const double norm_rel = std::sqrt(norm_var) / cnt / norm;
        if (!(norm > 0.0)) throw InputError("g2_pulsed: far-lag normalization is zero");
        for (std::size_t k = 0; k <= L; ++k) {
            const double num_rel = value[k] > 0.0 ? error[k] / value[k] : 0.0;
            value[k] = corr[k] / norm;
            error[k] = value[k] > 0.0 ? value[k] * std::hypot(num_rel, norm_rel) : error[k] * B * B / norm;
        }
    }

    if (options.errors == G2Errors::bootstrap) {
        const std::size_t R = std::max<std::size_t>(options.bootstrap_resamples, 2);
        std::vector<double> sum(L + 1, 0.0), sum_sq(L + 1, 0.0);
        std::vector<double> w(nz.size());
        std::vector<double> c(L + 1);
        const double zero_trials = N - static_cast<double>(nz.size());
        for (std::size_t r = 0; r < R; ++r) {
            Rng rng(options.bootstrap_seed, Stream::bootstrap, r);
            double W = static_cast<double>(rng.poisson(zero_trials));
            double b = 0, a = 0;
            for (std::size_t i = 0; i < nz.size(); ++i) {
                w[i] = static_cast<double>(rng.poisson(1.0));
                W += w[i];
                b += w[i] * nz[i].n;
                a += w[i] * nz[i].n * (nz[i].n - 1.0);
            }
            std::fill(c.begin(), c.end(), 0.0);
            for (const auto& p : pairs) c[p.lag] += w[p.first] * p.product;
            b /= W;
            a /= W;
            c[0] = a;
            for (std::size_t k = 1; k <= L; ++k) c[k] /= W * (N - static_cast<double>(k)) / N;
            double norm = b * b;
            if (options.normalization == G2Normalization::far_lags) {
                const auto [lo, hi] = norm_range(L);
                norm = 0.0;
                for (std::size_t k = lo; k <= hi; ++k) norm += c[k];
                norm /= static_cast<double>(hi - lo + 1);
            }
            for (std::size_t k = 0; k <= L; ++k) {
                const double g = norm > 0.0 ? c[k] / norm : 0.0;
                sum[k] += g;
                sum_sq[k] += g * g;
            }
        }
        for (std::size_t k = 0; k <= L; ++k) {
            const double m = sum[k] / static_cast<double>(R);
            error[k] = std::sqrt(std::max(sum_sq[k] / static_cast<double>(R) - m * m, 0.0) *
                                 static_cast<double>(R) / static_cast<double>(R - 1));
        }
    }

    // Undo the inflation of the zero-lag factorial moment by empty (dropped) trials.
    value[0] *= kept;
    error[0] *= kept;

    G2Series out;
    out.n_trials = n_trials;
    out.kept_fraction = kept;
    out.mean_counts = B / kept;
    for (std::size_t k = 0; k <= L; ++k) {
        out.lags.push_back(static_cast<int>(k));
        out.values.push_back(value[k]);
        out.errors.push_back(error[k]);
    }
    return out;
}

double g2_background_prediction(double p_signal, double mu_dark) {
    if (!(p_signal >= 0.0 && p_signal <= 1.0)) throw InvalidParameter("g2_background_prediction: p_signal must be in [0, 1]");
    if (!(mu_dark >= 0.0)) throw InvalidParameter("g2_background_prediction: mu_dark must be >= 0");
    if (p_signal == 0.0 && mu_dark == 0.0)
        throw InvalidParameter("g2_background_prediction: undefined without any counts");
    const double rho = p_signal / (p_signal + mu_dark);
    return 1.0 - rho * rho;
}

}  // namespace ercav::estimators
