#include "ercav/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ercav/error.hpp"

namespace ercav::fit {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Problem {
    const Model& model;
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> sigma;

    [[nodiscard]] double cost(const Eigen::VectorXd& theta) const {
        const std::span<const double> p(theta.data(), static_cast<std::size_t>(theta.size()));
        double c = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = (y[i] - model.value(x[i], p)) / sigma[i];
            c += r * r;
        }
        return c;
    }

    void linearize(const Eigen::VectorXd& theta, Eigen::MatrixXd& jac, Eigen::VectorXd& res) const {
        const std::size_t m = x.size();
        const std::size_t n = model.size();
        const std::span<const double> p(theta.data(), n);
        jac.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        res.resize(static_cast<Eigen::Index>(m));
        std::vector<double> g(n);
        for (std::size_t i = 0; i < m; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            res(row) = (y[i] - model.value(x[i], p)) / sigma[i];
            if (model.gradient) {
                model.gradient(x[i], p, g);
            } else {
                g = numeric_gradient(model, x[i], p);
            }
            for (std::size_t j = 0; j < n; ++j) jac(row, static_cast<Eigen::Index>(j)) = g[j] / sigma[i];
        }
    }
};

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

/// (J^T J)^-1 via the correlation-scaled matrix; false if numerically singular.
bool invert_normal(const Eigen::MatrixXd& a, Eigen::MatrixXd& cov) {
    const auto n = a.rows();
    Eigen::VectorXd scale(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(a(i, i) > 0.0) || !std::isfinite(a(i, i))) return false;
        scale(i) = 1.0 / std::sqrt(a(i, i));
    }
    const Eigen::MatrixXd b = scale.asDiagonal() * a * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    if (eig.info() != Eigen::Success) return false;
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 1e-13 * hi)) return false;
    const Eigen::MatrixXd binv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                                 eig.eigenvectors().transpose();
    cov = scale.asDiagonal() * binv * scale.asDiagonal();
    return true;
}

}  // namespace

std::size_t FitResult::index(std::string_view name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InvalidParameter("FitResult: no parameter named " + std::string(name));
    return static_cast<std::size_t>(it - names.begin());
}

double FitResult::error(std::size_t i) const {
    const double v = cov(i, i);
    return v >= 0.0 ? std::sqrt(v) : kNaN;
}

std::vector<double> numeric_gradient(const Model& model, double x, std::span<const double> params,
                                     double rel_step) {
    std::vector<double> p(params.begin(), params.end());
    std::vector<double> g(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double orig = p[j];
        const double h = rel_step * (orig != 0.0 ? std::abs(orig) : 1.0);
        p[j] = orig + h;
        const double up = model.value(x, p);
        p[j] = orig - h;
        const double down = model.value(x, p);
        p[j] = orig;
        g[j] = (up - down) / (2.0 * h);
    }
    return g;
}

FitResult fit_least_squares(const Model& model, std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma, std::vector<double> init,
                            const FitOptions& options) {
    const std::size_t n = model.size();
    const std::size_t m = x.size();
    if (!model.value) throw InputError("fit_least_squares: model has no value function");
    if (init.size() != n) throw InputError("fit_least_squares: initial guess has wrong size");
    if (y.size() != m || sigma.size() != m) throw InputError("fit_least_squares: x, y, sigma differ in length");
    if (m < n) throw InputError("fit_least_squares: fewer data points than parameters");
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !std::isfinite(sigma[i]))
            throw InputError("fit_least_squares: non-finite value in data at index " + std::to_string(i));
        if (!(sigma[i] > 0.0)) throw InputError("fit_least_squares: sigma must be > 0");
    }
    for (const double v : init)
        if (!std::isfinite(v)) throw InputError("fit_least_squares: non-finite initial guess");

    const Problem problem{model, x, y, sigma};
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd jac;
    Eigen::VectorXd res;
    problem.linearize(theta, jac, res);
    double cost = res.squaredNorm();

    double y_scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) y_scale += (y[i] / sigma[i]) * (y[i] / sigma[i]);
    const double zero_cost = 1e-30 * std::max(1.0, y_scale);

    FitResult out;
    out.names = model.names;
    double lambda = options.initial_damping;
    bool converged = cost <= zero_cost;
    int iter = 0;

    while (!converged && iter < options.max_iterations) {
        ++iter;
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * res;
        Eigen::VectorXd diag = a.diagonal();
        const double diag_max = diag.maxCoeff();
        if (!(diag_max > 0.0)) {
            out.message = "Jacobian vanishes";
            break;
        }
        diag = diag.cwiseMax(1e-15 * diag_max);

        bool accepted = false;
        Eigen::VectorXd step;
        double new_cost = cost;
        while (lambda <= 1e16) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * diag;
            step = damped.ldlt().solve(g);
            const Eigen::VectorXd trial = theta + step;
            if (all_finite(step) && all_finite(trial)) {
                new_cost = problem.cost(trial);
                if (std::isfinite(new_cost) && new_cost <= cost) {
                    accepted = true;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No decreasing step at any damping: numerically stationary.
            converged = true;
            out.message = "stationary point (no decreasing step)";
            break;
        }

        const Eigen::VectorXd d_sqrt = diag.cwiseSqrt();
        const double step_norm = d_sqrt.cwiseProduct(step).norm();
        const double theta_norm = d_sqrt.cwiseProduct(theta).norm();
        const double rel_step = step_norm / (theta_norm + 1e-300);
        const double rel_cost = (cost - new_cost) / std::max(cost, 1e-300);

        theta += step;
        cost = new_cost;
        problem.linearize(theta, jac, res);
        lambda = std::max(lambda / 10.0, 1e-12);

        if ((rel_step < options.tolerance && rel_cost < options.tolerance) || cost <= zero_cost) {
            converged = true;
            out.message = cost <= zero_cost ? "exact fit" : "converged";
        }
    }
    if (out.message.empty()) out.message = converged ? "exact fit" : "iteration limit reached";

    out.params.assign(theta.data(), theta.data() + n);
    out.chi2 = cost;
    out.residual_norm = std::sqrt(cost);
    out.dof = m - n;
    out.iterations = iter;
    out.covariance.assign(n * n, kNaN);

    Eigen::MatrixXd cov;
    if (invert_normal(jac.transpose() * jac, cov)) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out.covariance[i * n + j] = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out.converged = converged;
    } else {
        out.converged = false;
        out.message = "singular normal equations at solution";
    }
    return out;
}

namespace models {

Model linear() {
    Model m;
    m.names = {"intercept", "slope"};
    m.value = [](double x, std::span<const double> p) { return p[0] + p[1] * x; };
    m.gradient = [](double x, std::span<const double>, std::span<double> g) {
        g[0] = 1.0;
        g[1] = x;
    };
    return m;
}

Model exponential_decay() {
    Model m;
    m.names = {"amplitude", "lifetime", "background"};
    m.value = [](double x, std::span<const double> p) { return p[0] * std::exp(-x / p[1]) + p[2]; };
    m.gradient = [](double x, std::span<const double> p, std::span<double> g) {
        const double e = std::exp(-x / p[1]);
        g[0] = e;
        g[1] = p[0] * e * x / (p[1] * p[1]);
        g[2] = 1.0;
    };
    return m;
}

Model lorentzian(int n_peaks) {
    if (n_peaks < 1) throw InvalidParameter("lorentzian model needs at least one peak");
    Model m;
    m.names = {"offset"};
    for (int k = 1; k <= n_peaks; ++k) {
        const auto s = std::to_string(k);
        m.names.push_back("amplitude" + s);
        m.names.push_back("center" + s);
        m.names.push_back("fwhm" + s);
    }
    m.value = [n_peaks](double x, std::span<const double> p) {
        double f = p[0];
        for (int k = 0; k < n_peaks; ++k) {
            const double a = p[1 + 3 * k];
            const double dx = x - p[2 + 3 * k];
            const double h = 0.5 * p[3 + 3 * k];
            f += a * h * h / (dx * dx + h * h);
        }
        return f;
    };
    m.gradient = [n_peaks](double x, std::span<const double> p, std::span<double> g) {
        g[0] = 1.0;
        for (int k = 0; k < n_peaks; ++k) {
            const double a = p[1 + 3 * k];
            const double dx = x - p[2 + 3 * k];
            const double h = 0.5 * p[3 + 3 * k];
            const double den = dx * dx + h * h;
            g[1 + 3 * k] = h * h / den;
            g[2 + 3 * k] = a * 2.0 * dx * h * h / (den * den);
            g[3 + 3 * k] = a * h * dx * dx / (den * den);
        }
    };
    return m;
}

Model saturation_rate() {
    Model m;
    m.names = {"p_max", "p_sat"};
    m.value = [](double x, std::span<const double> p) {
        const double s = x / p[1];
        return p[0] * s / (1.0 + s);
    };
    m.gradient = [](double x, std::span<const double> p, std::span<double> g) {
        const double s = x / p[1];
        g[0] = s / (1.0 + s);
        g[1] = -p[0] * x / ((1.0 + s) * (1.0 + s) * p[1] * p[1]);
    };
    return m;
}

Model saturation_linewidth() {
    Model m;
    m.names = {"linewidth0", "p_sat"};
    m.value = [](double x, std::span<const double> p) { return p[0] * std::sqrt(1.0 + x / p[1]); };
    m.gradient = [](double x, std::span<const double> p, std::span<double> g) {
        const double root = std::sqrt(1.0 + x / p[1]);
        g[0] = root;
        g[1] = -p[0] * x / (2.0 * root * p[1] * p[1]);
    };
    return m;
}

Model gaussian() {
    static const double k = 4.0 * std::log(2.0);
    Model m;
    m.names = {"offset", "amplitude", "center", "fwhm"};
    m.value = [](double x, std::span<const double> p) {
        const double dx = x - p[2];
        return p[0] + p[1] * std::exp(-k * dx * dx / (p[3] * p[3]));
    };
    m.gradient = [](double x, std::span<const double> p, std::span<double> g) {
        const double dx = x - p[2];
        const double w = p[3];
        const double e = std::exp(-k * dx * dx / (w * w));
        g[0] = 1.0;
        g[1] = e;
        g[2] = p[1] * e * 2.0 * k * dx / (w * w);
        g[3] = p[1] * e * 2.0 * k * dx * dx / (w * w * w);
    };
    return m;
}

}  // namespace models
}  // namespace ercav::fit
