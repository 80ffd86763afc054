#include "nocsim/losses.hpp"

#include <cmath>
#include <string>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

namespace {

double user_mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size())
        throw LengthMismatch("recon_loss: image sizes differ");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace

double recon_loss(const std::vector<Eigen::VectorXd>& originals,
                  const std::vector<Eigen::VectorXd>& reconstructions) {
    if (originals.size() != reconstructions.size() || originals.empty())
        throw LengthMismatch("recon_loss: user counts differ or empty");
    double sum = 0;
    for (std::size_t u = 0; u < originals.size(); ++u)
        sum += user_mse(originals[u], reconstructions[u]);
    return sum / static_cast<double>(originals.size());
}

double fairness_loss(const std::vector<double>& per_user_mse) {
    if (per_user_mse.empty())
        throw LengthMismatch("fairness_loss: no users");
    const double n = static_cast<double>(per_user_mse.size());
    double mean = 0;
    for (double m : per_user_mse) mean += m;
    mean /= n;
    double mad = 0;
    for (double m : per_user_mse) mad += std::abs(m - mean);
    return mad / n;
}

double orth_loss(const std::vector<Eigen::VectorXd>& features) {
    const int n = static_cast<int>(features.size());
    if (n < 2) return 0.0;  // no pairs
    for (const auto& z : features)
        if (z.norm() < 1e-12)
            throw DegenerateFeature("orth_loss: zero feature vector");
    double sum = 0;
    int pairs = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double c = features[i].dot(features[j]) /
                             (features[i].norm() * features[j].norm());
            sum += c * c;
            ++pairs;
        }
    return sum / pairs;
}

LossBreakdown total_loss(const std::vector<Eigen::VectorXd>& originals,
                         const std::vector<Eigen::VectorXd>& reconstructions,
                         const std::vector<Eigen::VectorXd>& features,
                         const LossWeights& weights) {
    LossBreakdown b;
    b.recon = recon_loss(originals, reconstructions);
    std::vector<double> mses(originals.size());
    for (std::size_t u = 0; u < originals.size(); ++u)
        mses[u] = user_mse(originals[u], reconstructions[u]);
    b.fair = fairness_loss(mses);
    b.orth = orth_loss(features);
    b.total = b.recon + weights.lambda_fair * b.fair + weights.lambda_orth * b.orth;
    return b;
}

std::vector<Eigen::VectorXd> recon_fair_grad(
    const std::vector<Eigen::VectorXd>& originals,
    const std::vector<Eigen::VectorXd>& reconstructions, double lambda_fair) {
    const int n = static_cast<int>(originals.size());
    if (n == 0 || reconstructions.size() != originals.size())
        throw LengthMismatch("recon_fair_grad: user counts differ or empty");
    std::vector<double> mses(n);
    double mean = 0;
    for (int u = 0; u < n; ++u) {
        mses[u] = user_mse(originals[u], reconstructions[u]);
        mean += mses[u];
    }
    mean /= n;
    double sign_sum = 0;
    std::vector<double> signs(n);
    for (int u = 0; u < n; ++u) {
        signs[u] = (mses[u] > mean) ? 1.0 : (mses[u] < mean ? -1.0 : 0.0);
        sign_sum += signs[u];
    }
    std::vector<Eigen::VectorXd> grads(n);
    for (int u = 0; u < n; ++u) {
        // d total / d mse_u for the recon and fairness terms combined.
        const double w =
            1.0 / n + lambda_fair * (signs[u] - sign_sum / n) / n;
        grads[u] = (2.0 * w / static_cast<double>(originals[u].size())) *
                   (reconstructions[u] - originals[u]);
    }
    return grads;
}

std::vector<Eigen::VectorXd> orth_grad(
    const std::vector<Eigen::VectorXd>& features) {
    const int n = static_cast<int>(features.size());
    const int pairs = n * (n - 1) / 2;
    std::vector<Eigen::VectorXd> grads(n);
    for (int u = 0; u < n; ++u)
        grads[u] = Eigen::VectorXd::Zero(features[u].size());
    if (n < 2) return grads;  // no pairs, zero gradient
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double a = features[i].squaredNorm();
            const double b = features[j].squaredNorm();
            if (a < 1e-24 || b < 1e-24)
                throw DegenerateFeature("orth_grad: zero feature vector");
            const double s = features[i].dot(features[j]);
            const double scale = 2.0 / (a * b * pairs);
            grads[i] += scale * (s * features[j] - (s * s / a) * features[i]);
            grads[j] += scale * (s * features[i] - (s * s / b) * features[j]);
        }
    return grads;
}

namespace {

double relative_error(double fd, double g) {
    return std::abs(fd - g) / std::max({1.0, std::abs(fd), std::abs(g)});
}

}  // namespace

double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                  const Eigen::VectorXd& point, double step) {
    if (!(step > 0)) throw ConfigError("grad_check: step must be positive");
    const Eigen::VectorXd g = grad(point);
    if (g.size() != point.size())
        throw ShapeMismatch("grad_check: gradient size differs from point");
    double worst = 0;
    Eigen::VectorXd p = point;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double saved = p(i);
        p(i) = saved + step;
        const double hi = f(p);
        p(i) = saved - step;
        const double lo = f(p);
        p(i) = saved;
        worst = std::max(worst, relative_error((hi - lo) / (2 * step), g(i)));
    }
    return worst;
}

double grad_check_probes(const std::function<double(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& analytic_grad,
                         const Eigen::VectorXd& point, double step,
                         int num_probes, std::uint64_t seed) {
    if (!(step > 0)) throw ConfigError("grad_check_probes: step must be positive");
    if (analytic_grad.size() != point.size())
        throw ShapeMismatch("grad_check_probes: gradient size differs from point");
    Rng rng(seed);
    double worst = 0;
    Eigen::VectorXd p = point;
    for (int probe = 0; probe < num_probes; ++probe) {
        const Eigen::Index i =
            static_cast<Eigen::Index>(rng.integer(static_cast<std::uint64_t>(p.size())));
        const double saved = p(i);
        p(i) = saved + step;
        const double hi = f(p);
        p(i) = saved - step;
        const double lo = f(p);
        p(i) = saved;
        worst = std::max(worst,
                         relative_error((hi - lo) / (2 * step), analytic_grad(i)));
    }
    return worst;
}

}  // namespace nocsim
