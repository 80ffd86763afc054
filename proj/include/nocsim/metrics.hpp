#pragma once

#include <vector>

#include <Eigen/Dense>

namespace nocsim {

struct SubspaceEstimate {
    int user_index = 0;
    Eigen::MatrixXd basis;  // dim x rank, orthonormal columns
    int rank = 0;
};

struct MetricsConfig {
    int subspace_rank = 4;
    double projection_threshold = 0.2;
    double psnr_max_value = 1.0;
};

// Entry (i, j) is the mean over aligned samples of cos(z_i^m, z_j^m).
Eigen::MatrixXd cosine_matrix(
    const std::vector<std::vector<Eigen::VectorXd>>& per_user_samples);

// Top principal directions of the raw (uncentered) sample matrix; the span
// of the samples is a linear subspace through the origin. Sign is fixed by
// making each vector's largest-magnitude entry positive.
SubspaceEstimate estimate_subspace(const std::vector<Eigen::VectorXd>& samples,
                                   int rank, int user_index = 0);

// Squared norm of the orthogonal projection of z onto the basis span.
double projection_power(const Eigen::VectorXd& z, const SubspaceEstimate& sub);

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
// Capped at 120 dB when MSE < 1e-12.
double psnr(const Eigen::VectorXd& original, const Eigen::VectorXd& reconstruction,
            double max_value);

double ber(const std::vector<int>& sent, const std::vector<int>& received);

struct MetricsReport {
    std::vector<double> snr_grid;
    std::vector<std::vector<double>> mse_grid;   // [snr][user]
    std::vector<std::vector<double>> psnr_grid;  // [snr][user]
    Eigen::MatrixXd cosine;                      // mean pairwise cosines
    Eigen::MatrixXd angles_deg;                  // arccos of cosine entries
    Eigen::MatrixXd cross_projection;  // (i,j): mean power of unit i-features
                                       // projected onto user j's subspace
    double orth_value = 0;
    int symbols_per_image = 0;  // complex symbols per transmitted image
    int subspace_rank = 0;
};

}  // namespace nocsim
