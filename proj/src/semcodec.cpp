#include "nocsim/semcodec.hpp"

#include <cmath>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

int CodecParameters::param_count() const {
    return enc1.param_count() + enc2.param_count() + dec1.param_count() +
           dec2.param_count();
}

void CodecParameters::append_to(std::vector<double>& out) const {
    append_params(enc1, out);
    append_params(enc2, out);
    append_params(dec1, out);
    append_params(dec2, out);
}

std::size_t CodecParameters::read_from(const std::vector<double>& v,
                                       std::size_t pos) {
    pos = read_params(enc1, v, pos);
    pos = read_params(enc2, v, pos);
    pos = read_params(dec1, v, pos);
    return read_params(dec2, v, pos);
}

void CodecParameters::set_zero() {
    enc1.set_zero();
    enc2.set_zero();
    dec1.set_zero();
    dec2.set_zero();
}

CodecParameters init_codec(int image_dim, int hidden, int feature_dim,
                           std::uint64_t seed) {
    if (image_dim < 1 || hidden < 1 || feature_dim < 1)
        throw ConfigError("codec dims must be positive");
    if (feature_dim % 2 != 0)
        throw ConfigError("codec feature_dim must be even");
    Rng rng(seed);
    CodecParameters p;
    p.enc1 = init_affine(hidden, image_dim, rng);
    p.enc2 = init_affine(feature_dim, hidden, rng);
    p.dec1 = init_affine(hidden, feature_dim, rng);
    p.dec2 = init_affine(image_dim, hidden, rng);
    return p;
}

CodecParameters zeros_like(const CodecParameters& p) {
    return {zeros_like(p.enc1), zeros_like(p.enc2), zeros_like(p.dec1),
            zeros_like(p.dec2)};
}

namespace {

Eigen::VectorXd two_layer(const Affine& first, const Affine& second,
                          const Eigen::VectorXd& in, CodecCache* cache,
                          const char* what) {
    Eigen::MatrixXd x = in.transpose();
    Eigen::MatrixXd z = first.forward(x);
    Eigen::MatrixXd y = second.forward(relu(z));
    check_finite(y, what);
    if (cache) {
        cache->x = std::move(x);
        cache->z = std::move(z);
    }
    return y.transpose();
}

Eigen::VectorXd two_layer_backward(const Affine& first, const Affine& second,
                                   const CodecCache& cache,
                                   const Eigen::VectorXd& d_out, Affine& g_first,
                                   Affine& g_second) {
    Eigen::MatrixXd dy = d_out.transpose();
    Eigen::MatrixXd dh = second.backward(relu(cache.z), dy, g_second);
    Eigen::MatrixXd dz = relu_backward(cache.z, dh);
    return first.backward(cache.x, dz, g_first).transpose();
}

}  // namespace

Eigen::VectorXd encode(const Eigen::VectorXd& image, const CodecParameters& p,
                       CodecCache* cache) {
    if (image.size() != p.enc1.in())
        throw ShapeMismatch("encode: image size " + std::to_string(image.size()) +
                            ", expected " + std::to_string(p.enc1.in()));
    return two_layer(p.enc1, p.enc2, image, cache, "encode");
}

Eigen::VectorXd decode(const Eigen::VectorXd& feature, const CodecParameters& p,
                       CodecCache* cache) {
    if (feature.size() != p.dec1.in())
        throw ShapeMismatch("decode: feature size " +
                            std::to_string(feature.size()) + ", expected " +
                            std::to_string(p.dec1.in()));
    return two_layer(p.dec1, p.dec2, feature, cache, "decode");
}

Eigen::VectorXd encode_backward(const CodecParameters& p, const CodecCache& cache,
                                const Eigen::VectorXd& d_feature,
                                CodecParameters& grad) {
    return two_layer_backward(p.enc1, p.enc2, cache, d_feature, grad.enc1,
                              grad.enc2);
}

Eigen::VectorXd decode_backward(const CodecParameters& p, const CodecCache& cache,
                                const Eigen::VectorXd& d_output,
                                CodecParameters& grad) {
    return two_layer_backward(p.dec1, p.dec2, cache, d_output, grad.dec1,
                              grad.dec2);
}

Eigen::VectorXd power_normalize(const Eigen::VectorXd& x) {
    const double norm = x.norm();
    if (norm < 1e-12)
        throw DegenerateFeature("power_normalize: feature has zero norm");
    return x * (std::sqrt(static_cast<double>(x.size())) / norm);
}

Eigen::VectorXd power_normalize_backward(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& d_out) {
    const double norm = x.norm();
    if (norm < 1e-12)
        throw DegenerateFeature("power_normalize_backward: zero norm");
    const double alpha = std::sqrt(static_cast<double>(x.size())) / norm;
    const Eigen::VectorXd unit = x / norm;
    return alpha * (d_out - unit * unit.dot(d_out));
}

namespace {

void add_blob(Eigen::VectorXd& img, Rng& rng) {
    const double cx = rng.uniform(1.5, 6.5);
    const double cy = rng.uniform(1.5, 6.5);
    const double s2 = 2.0 * std::pow(rng.uniform(0.8, 2.2), 2);
    const double amp = rng.uniform(0.5, 1.0);
    const double bg = rng.uniform(0.0, 0.2);
    for (int r = 0; r < kImageSide; ++r)
        for (int c = 0; c < kImageSide; ++c) {
            const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
            img(r * kImageSide + c) = bg + amp * std::exp(-d2 / s2);
        }
}

void add_bars(Eigen::VectorXd& img, Rng& rng) {
    const bool horizontal = rng.integer(2) == 0;
    const int period = 2 + 2 * static_cast<int>(rng.integer(2));
    const int phase = static_cast<int>(rng.integer(period));
    const double hi = rng.uniform(0.6, 1.0);
    const double lo = rng.uniform(0.0, 0.3);
    for (int r = 0; r < kImageSide; ++r)
        for (int c = 0; c < kImageSide; ++c) {
            const int pos = horizontal ? r : c;
            const bool on = ((pos + phase) % period) < period / 2;
            img(r * kImageSide + c) = on ? hi : lo;
        }
}

void add_checker(Eigen::VectorXd& img, Rng& rng) {
    const int cell = 1 << rng.integer(3);  // 1, 2 or 4
    const double hi = rng.uniform(0.6, 1.0);
    const double lo = rng.uniform(0.0, 0.3);
    for (int r = 0; r < kImageSide; ++r)
        for (int c = 0; c < kImageSide; ++c) {
            const bool on = ((r / cell) + (c / cell)) % 2 == 0;
            img(r * kImageSide + c) = on ? hi : lo;
        }
}

}  // namespace

std::vector<Eigen::VectorXd> synth_dataset(int num_samples, std::uint64_t seed) {
    if (num_samples < 1)
        throw ConfigError("synth_dataset: num_samples must be >= 1");
    Rng rng(seed);
    std::vector<Eigen::VectorXd> out;
    out.reserve(num_samples);
    for (int i = 0; i < num_samples; ++i) {
        Eigen::VectorXd img(kImagePixels);
        switch (rng.integer(3)) {
            case 0: add_blob(img, rng); break;
            case 1: add_bars(img, rng); break;
            default: add_checker(img, rng); break;
        }
        out.push_back(img.cwiseMax(0.0).cwiseMin(1.0));
    }
    return out;
}

}  // namespace nocsim
