#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nocsim/nn.hpp"

namespace nocsim {

// Two-layer encoder and mirror decoder, parameter-shared across users.
struct CodecParameters {
    Affine enc1;  // image_dim -> hidden
    Affine enc2;  // hidden -> feature_dim
    Affine dec1;  // feature_dim -> hidden
    Affine dec2;  // hidden -> image_dim

    int image_dim() const { return enc1.in(); }
    int feature_dim() const { return enc2.out(); }

    int param_count() const;
    void append_to(std::vector<double>& out) const;
    std::size_t read_from(const std::vector<double>& v, std::size_t pos);
    void set_zero();
};

CodecParameters init_codec(int image_dim, int hidden, int feature_dim,
                           std::uint64_t seed);
CodecParameters zeros_like(const CodecParameters& p);

struct CodecCache {
    Eigen::MatrixXd x, z;  // input row and hidden pre-activation row
};

Eigen::VectorXd encode(const Eigen::VectorXd& image, const CodecParameters& p,
                       CodecCache* cache = nullptr);
Eigen::VectorXd decode(const Eigen::VectorXd& feature, const CodecParameters& p,
                       CodecCache* cache = nullptr);

// Gradients of the two halves; each returns dL/d(its input).
Eigen::VectorXd encode_backward(const CodecParameters& p, const CodecCache& cache,
                                const Eigen::VectorXd& d_feature,
                                CodecParameters& grad);
Eigen::VectorXd decode_backward(const CodecParameters& p, const CodecCache& cache,
                                const Eigen::VectorXd& d_output,
                                CodecParameters& grad);

// Scales x so the mean square per entry is 1, i.e. unit average power per
// complex symbol once consecutive pairs are packed as I/Q rails.
Eigen::VectorXd power_normalize(const Eigen::VectorXd& x);
Eigen::VectorXd power_normalize_backward(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& d_out);

// 8x8 grayscale mixture of Gaussian blobs, bars and checkerboards in [0,1].
std::vector<Eigen::VectorXd> synth_dataset(int num_samples, std::uint64_t seed);

constexpr int kImagePixels = 64;
constexpr int kImageSide = 8;

}  // namespace nocsim
