#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nocsim/nn.hpp"

namespace nocsim {

struct NsmDims {
    int channels = 8;   // C, per-token feature width (even)
    int latent = 16;    // M
    int length = 128;   // L, codeword length
    int depth = 10;     // N_t
    int tokens = 8;     // K, sequence length

    void validate() const;  // throws ConfigError
};

// Gated modulation network: per layer j, the running state is multiplied by
// a codeword embedding and an SNR embedding, then mixed by a dense map; the
// final state drives a sigmoid gate on the input.
struct NsmParameters {
    NsmDims dims;
    Affine fu0;                   // C -> M
    std::vector<FaBlock> fa_ma;   // depth blocks, L -> M
    std::vector<FaBlock> fa_s;    // depth blocks, 1 -> M
    std::vector<Affine> fu;       // depth maps; M -> M, last is M -> C

    int param_count() const;
    void append_to(std::vector<double>& out) const;
    std::size_t read_from(const std::vector<double>& v, std::size_t pos);
    void set_zero();
};

NsmParameters init_nsm(const NsmDims& dims, std::uint64_t seed);
NsmParameters zeros_like(const NsmParameters& p);

// Codeword and SNR embeddings are identical across tokens, so a/b hold one
// row each; k[0] is the projected input, k[j] the post-mix state of layer j.
struct NsmActivations {
    std::vector<Eigen::RowVectorXd> a, b;  // 1 x M per layer
    std::vector<Eigen::MatrixXd> k;        // depth+1 entries; k[depth] is K x C
    std::vector<Eigen::MatrixXd> g;        // K x M per layer, input to fu[j]
    std::vector<FaCache> fa_ma_cache, fa_s_cache;
    Eigen::MatrixXd gate;                  // K x C, sigmoid of k[depth]
};

Eigen::MatrixXd nsm_forward(const Eigen::MatrixXd& input,
                            const std::vector<int>& codeword, double snr_db,
                            const NsmParameters& params,
                            NsmActivations* acts = nullptr);

// Returns dL/dinput and accumulates parameter gradients into grad.
// acts must come from nsm_forward on the same (input, codeword, snr, params).
Eigen::MatrixXd nsm_backward(const Eigen::MatrixXd& input,
                             const NsmParameters& params,
                             const NsmActivations& acts,
                             const Eigen::MatrixXd& d_output,
                             NsmParameters& grad);

}  // namespace nocsim
