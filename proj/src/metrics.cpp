#include "nocsim/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

Eigen::MatrixXd cosine_matrix(
    const std::vector<std::vector<Eigen::VectorXd>>& per_user_samples) {
    const int k = static_cast<int>(per_user_samples.size());
    if (k == 0) throw ShapeMismatch("cosine_matrix: no users");
    const std::size_t count = per_user_samples[0].size();
    if (count == 0) throw ShapeMismatch("cosine_matrix: no samples");
    for (const auto& samples : per_user_samples)
        if (samples.size() != count)
            throw LengthMismatch("cosine_matrix: per-user sample counts differ");

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
            double sum = 0;
            for (std::size_t s = 0; s < count; ++s) {
                const Eigen::VectorXd& zi = per_user_samples[i][s];
                const Eigen::VectorXd& zj = per_user_samples[j][s];
                const double ni = zi.norm();
                const double nj = zj.norm();
                if (ni < 1e-12 || nj < 1e-12)
                    throw DegenerateFeature("cosine_matrix: zero feature sample");
                sum += zi.dot(zj) / (ni * nj);
            }
            m(i, j) = sum / static_cast<double>(count);
            m(j, i) = m(i, j);
        }
    return m;
}

SubspaceEstimate estimate_subspace(const std::vector<Eigen::VectorXd>& samples,
                                   int rank, int user_index) {
    if (rank < 1) throw ConfigError("estimate_subspace: rank must be >= 1");
    const int count = static_cast<int>(samples.size());
    if (count < rank)
        throw RankDeficient("estimate_subspace: " + std::to_string(count) +
                            " samples for rank " + std::to_string(rank));
    const Eigen::Index dim = samples[0].size();
    Eigen::MatrixXd data(count, dim);
    for (int s = 0; s < count; ++s) {
        if (samples[s].size() != dim)
            throw ShapeMismatch("estimate_subspace: sample dims differ");
        data.row(s) = samples[s].transpose();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = std::max(count, static_cast<int>(dim)) *
                       std::numeric_limits<double>::epsilon() *
                       (sv.size() ? sv(0) : 0.0);
    if (sv.size() < rank || sv(rank - 1) <= tol)
        throw RankDeficient("estimate_subspace: sample matrix rank below " +
                            std::to_string(rank));

    SubspaceEstimate sub;
    sub.user_index = user_index;
    sub.rank = rank;
    sub.basis = svd.matrixV().leftCols(rank);
    for (int c = 0; c < rank; ++c) {
        Eigen::Index arg = 0;
        sub.basis.col(c).cwiseAbs().maxCoeff(&arg);
        if (sub.basis(arg, c) < 0) sub.basis.col(c) = -sub.basis.col(c);
    }
    return sub;
}

double projection_power(const Eigen::VectorXd& z, const SubspaceEstimate& sub) {
    if (z.size() != sub.basis.rows())
        throw ShapeMismatch("projection_power: vector dim " +
                            std::to_string(z.size()) + " vs subspace dim " +
                            std::to_string(sub.basis.rows()));
    return (sub.basis.transpose() * z).squaredNorm();
}

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw LengthMismatch("mse: sizes differ");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double psnr(const Eigen::VectorXd& original, const Eigen::VectorXd& reconstruction,
            double max_value) {
    const double err = mse(original, reconstruction);
    if (err < 1e-12) return 120.0;
    return 10.0 * std::log10(max_value * max_value / err);
}

double ber(const std::vector<int>& sent, const std::vector<int>& received) {
    if (sent.size() != received.size())
        throw LengthMismatch("ber: stream lengths differ");
    if (sent.empty()) throw LengthMismatch("ber: empty streams");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < sent.size(); ++i)
        if (sent[i] != received[i]) ++errors;
    return static_cast<double>(errors) / static_cast<double>(sent.size());
}

}  // namespace nocsim
