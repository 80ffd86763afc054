#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace nocsim {

struct LossWeights {
    double lambda_fair = 0.01;
    double lambda_orth = 0.01;
};

struct LossBreakdown {
    double recon = 0;
    double fair = 0;
    double orth = 0;
    double total = 0;
};

// Mean over users of per-user pixel MSE.
double recon_loss(const std::vector<Eigen::VectorXd>& originals,
                  const std::vector<Eigen::VectorXd>& reconstructions);

// Mean absolute deviation of per-user MSEs from their mean.
double fairness_loss(const std::vector<double>& per_user_mse);

// Mean squared cosine similarity over unordered user pairs.
double orth_loss(const std::vector<Eigen::VectorXd>& features);

LossBreakdown total_loss(const std::vector<Eigen::VectorXd>& originals,
                         const std::vector<Eigen::VectorXd>& reconstructions,
                         const std::vector<Eigen::VectorXd>& features,
                         const LossWeights& weights);

// Gradients matching the losses above; used by the training backward pass.
std::vector<Eigen::VectorXd> recon_fair_grad(
    const std::vector<Eigen::VectorXd>& originals,
    const std::vector<Eigen::VectorXd>& reconstructions, double lambda_fair);
std::vector<Eigen::VectorXd> orth_grad(
    const std::vector<Eigen::VectorXd>& features);

// Worst componentwise relative error between the analytic gradient and
// central finite differences of f at point.
double grad_check(const std::function<double(const Eigen::VectorXd&)>& f,
                  const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                  const Eigen::VectorXd& point, double step);

// Same check restricted to num_probes random components.
double grad_check_probes(const std::function<double(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& analytic_grad,
                         const Eigen::VectorXd& point, double step,
                         int num_probes, std::uint64_t seed);

}  // namespace nocsim
