#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nocsim {

class Rng;

// Dense layer y = x W^T + b applied row-wise; rows of x are independent
// samples, so the same struct doubles as a gradient accumulator.
struct Affine {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;  // out

    int in() const { return static_cast<int>(w.cols()); }
    int out() const { return static_cast<int>(w.rows()); }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    // Accumulates dW/db into grad; returns dL/dx.
    Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy,
                             Affine& grad) const;

    void set_zero();
    int param_count() const { return out() * (in() + 1); }
};

// Weights ~ N(0, 1/fan_in), biases zero.
Affine init_affine(int out_dim, int in_dim, Rng& rng);
Affine zeros_like(const Affine& a);

Eigen::MatrixXd relu(const Eigen::MatrixXd& x);
// dL/dx given pre-activation z and upstream dL/drelu(z).
Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& dy);
Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x);

// Three chained dense layers with ReLU after the first two, linear last.
struct FaBlock {
    Affine l1, l2, l3;

    void set_zero();
    int param_count() const;
};
FaBlock init_fa(int out_dim, int in_dim, int hidden, Rng& rng);
FaBlock zeros_like(const FaBlock& f);

struct FaCache {
    Eigen::MatrixXd x, z1, z2;  // input and the two pre-activations
};
Eigen::MatrixXd fa_forward(const FaBlock& f, const Eigen::MatrixXd& x,
                           FaCache* cache = nullptr);
// Inputs to FA blocks are constants (codeword, SNR): no input gradient.
void fa_backward(const FaBlock& f, const FaCache& cache,
                 const Eigen::MatrixXd& dy, FaBlock& grad);

void check_finite(const Eigen::MatrixXd& m, const std::string& context);

// Flat parameter-vector plumbing for SGD updates and gradient checks.
void append_params(const Affine& a, std::vector<double>& out);
void append_params(const FaBlock& f, std::vector<double>& out);
std::size_t read_params(Affine& a, const std::vector<double>& v, std::size_t pos);
std::size_t read_params(FaBlock& f, const std::vector<double>& v, std::size_t pos);

}  // namespace nocsim
