#include "nocsim/nn.hpp"

#include <cmath>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

Eigen::MatrixXd Affine::forward(const Eigen::MatrixXd& x) const {
    if (x.cols() != w.cols())
        throw ShapeMismatch("affine: input width " + std::to_string(x.cols()) +
                            " vs expected " + std::to_string(w.cols()));
    Eigen::MatrixXd y = x * w.transpose();
    y.rowwise() += b.transpose();
    return y;
}

Eigen::MatrixXd Affine::backward(const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& dy, Affine& grad) const {
    if (dy.rows() != x.rows() || dy.cols() != w.rows())
        throw ShapeMismatch("affine backward: upstream gradient shape");
    grad.w.noalias() += dy.transpose() * x;
    grad.b.noalias() += dy.colwise().sum().transpose();
    return dy * w;
}

void Affine::set_zero() {
    w.setZero();
    b.setZero();
}

Affine init_affine(int out_dim, int in_dim, Rng& rng) {
    Affine a;
    a.w.resize(out_dim, in_dim);
    // nonzero bias keeps initial relu layers alive and the codec output off
    // the exact-zero ray that power normalization rejects
    a.b = Eigen::VectorXd::Constant(out_dim, 0.01);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (int r = 0; r < out_dim; ++r)
        for (int c = 0; c < in_dim; ++c) a.w(r, c) = scale * rng.gaussian();
    return a;
}

Affine zeros_like(const Affine& a) {
    Affine z;
    z.w = Eigen::MatrixXd::Zero(a.w.rows(), a.w.cols());
    z.b = Eigen::VectorXd::Zero(a.b.size());
    return z;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) {
    return x.cwiseMax(0.0);
}

Eigen::MatrixXd relu_backward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& dy) {
    return (z.array() > 0.0).select(dy, Eigen::MatrixXd::Zero(dy.rows(), dy.cols()));
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return 1.0 / (1.0 + (-x.array()).exp());
}

void FaBlock::set_zero() {
    l1.set_zero();
    l2.set_zero();
    l3.set_zero();
}

int FaBlock::param_count() const {
    return l1.param_count() + l2.param_count() + l3.param_count();
}

FaBlock init_fa(int out_dim, int in_dim, int hidden, Rng& rng) {
    FaBlock f;
    f.l1 = init_affine(hidden, in_dim, rng);
    f.l2 = init_affine(hidden, hidden, rng);
    f.l3 = init_affine(out_dim, hidden, rng);
    return f;
}

FaBlock zeros_like(const FaBlock& f) {
    return {zeros_like(f.l1), zeros_like(f.l2), zeros_like(f.l3)};
}

Eigen::MatrixXd fa_forward(const FaBlock& f, const Eigen::MatrixXd& x,
                           FaCache* cache) {
    Eigen::MatrixXd z1 = f.l1.forward(x);
    Eigen::MatrixXd z2 = f.l2.forward(relu(z1));
    Eigen::MatrixXd y = f.l3.forward(relu(z2));
    if (cache) {
        cache->x = x;
        cache->z1 = std::move(z1);
        cache->z2 = std::move(z2);
    }
    return y;
}

void fa_backward(const FaBlock& f, const FaCache& cache,
                 const Eigen::MatrixXd& dy, FaBlock& grad) {
    Eigen::MatrixXd dh2 = f.l3.backward(relu(cache.z2), dy, grad.l3);
    Eigen::MatrixXd dz2 = relu_backward(cache.z2, dh2);
    Eigen::MatrixXd dh1 = f.l2.backward(relu(cache.z1), dz2, grad.l2);
    Eigen::MatrixXd dz1 = relu_backward(cache.z1, dh1);
    f.l1.backward(cache.x, dz1, grad.l1);
}

void check_finite(const Eigen::MatrixXd& m, const std::string& context) {
    if (!m.allFinite())
        throw NonFiniteActivation(context + ": non-finite value encountered");
}

void append_params(const Affine& a, std::vector<double>& out) {
    out.insert(out.end(), a.w.data(), a.w.data() + a.w.size());
    out.insert(out.end(), a.b.data(), a.b.data() + a.b.size());
}

void append_params(const FaBlock& f, std::vector<double>& out) {
    append_params(f.l1, out);
    append_params(f.l2, out);
    append_params(f.l3, out);
}

std::size_t read_params(Affine& a, const std::vector<double>& v, std::size_t pos) {
    if (pos + a.w.size() + a.b.size() > v.size())
        throw ShapeMismatch("read_params: parameter vector too short");
    std::copy(v.begin() + pos, v.begin() + pos + a.w.size(), a.w.data());
    pos += a.w.size();
    std::copy(v.begin() + pos, v.begin() + pos + a.b.size(), a.b.data());
    return pos + a.b.size();
}

std::size_t read_params(FaBlock& f, const std::vector<double>& v, std::size_t pos) {
    pos = read_params(f.l1, v, pos);
    pos = read_params(f.l2, v, pos);
    return read_params(f.l3, v, pos);
}

}  // namespace nocsim
