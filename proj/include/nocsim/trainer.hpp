#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nocsim/channel.hpp"
#include "nocsim/codebook.hpp"
#include "nocsim/losses.hpp"
#include "nocsim/metrics.hpp"
#include "nocsim/nsm.hpp"
#include "nocsim/semcodec.hpp"

namespace nocsim {

struct ModelDims {
    int image_dim = 64;
    int hidden = 128;
    int feature_dim = 64;  // real coefficients per image, 2 per complex symbol
    int tokens = 8;
    int nsm_latent = 16;
    int nsm_depth = 10;
    int codeword_length = 128;

    int channels() const { return feature_dim / tokens; }
    int complex_symbols() const { return feature_dim / 2; }
    NsmDims nsm_dims() const;
    void validate() const;  // throws ConfigError

    bool operator==(const ModelDims&) const = default;
};

// One codec shared by every user plus separate transmit/receive gate nets.
struct ModelParameters {
    ModelDims dims;
    CodecParameters codec;
    NsmParameters tx;
    NsmParameters rx;

    int param_count() const;
    std::vector<double> to_vector() const;
    void from_vector(const std::vector<double>& v);
    void set_zero();
};

ModelParameters init_model(const ModelDims& dims, std::uint64_t seed);

struct TrainConfig {
    double learning_rate = 1e-2;
    double clip_norm = 1.0;  // cap on the global gradient norm; <= 0 disables
    int epochs = 40;
    int num_users = 2;
    int batch_size = 16;
    int dataset_size = 256;
    double snr_lo_db = 0;
    double snr_hi_db = 15;
    ChannelKind channel;
    Codebook codebook;
    std::uint64_t seed = 1;
    LossWeights weights;
    ModelDims dims;

    void validate() const;  // throws ConfigError
};

struct TrainReport {
    std::vector<LossBreakdown> trace;  // one mean breakdown per epoch
    Eigen::MatrixXd final_angles_deg;  // pairwise transmit-feature angles
    std::vector<double> per_user_mse;
    std::uint64_t seed = 0;
    double wall_clock_seconds = 0;  // informational; not serialized
};

// One frozen stimulus: the images, conditioning SNR, channel draw and noise
// are all fixed, so pipeline_loss is a deterministic function of parameters.
struct BatchItem {
    std::vector<Eigen::VectorXd> images;      // one per user
    double snr_db = 0;
    ChannelRealization channel;
    std::vector<Eigen::VectorXcd> noise;      // one per receiver
};
using PipelineBatch = std::vector<BatchItem>;

PipelineBatch make_batch(const TrainConfig& cfg,
                         const std::vector<Eigen::VectorXd>& dataset, Rng& data_rng,
                         Rng& channel_rng, Rng& noise_rng, Rng& snr_rng);

// Mean loss over the batch; when grad is non-null, accumulates dLoss/dparams.
LossBreakdown pipeline_loss(const ModelParameters& params, const Codebook& book,
                            const PipelineBatch& batch, const LossWeights& weights,
                            ModelParameters* grad = nullptr);

// Per-user outputs of one item; rx_codewords reassigns the codeword used by
// each receiver (mismatch probing); empty means matched decoding.
struct ItemForward {
    std::vector<Eigen::VectorXd> reconstructions;  // unclamped decoder output
    std::vector<double> mse_clamped;               // after clamping to [0,1]
    std::vector<Eigen::VectorXd> tx_features;      // normalized transmit rails
};
ItemForward pipeline_forward(const ModelParameters& params, const Codebook& book,
                             const BatchItem& item,
                             const std::vector<int>& rx_codewords = {});

std::pair<ModelParameters, TrainReport> train(
    const TrainConfig& cfg,
    const std::function<void(int, const LossBreakdown&)>& epoch_observer = {});

struct EvalConfig {
    std::vector<double> snr_grid = {0, 5, 10, 15};
    ChannelKind channel;
    int num_users = 2;
    int batches = 8;
    int batch_size = 16;
    std::uint64_t seed = 1;
    int subspace_rank = 4;
};

MetricsReport evaluate(const ModelParameters& params, const Codebook& book,
                       const EvalConfig& cfg);

struct MismatchOptions {
    ChannelKind channel;
    int num_users = 0;  // 0 means all codebook users transmit
    int batches = 8;
    int batch_size = 16;
};

struct MismatchResult {
    double mse = 0;
    double psnr = 0;
};

// Decodes user tx_user's transmission with codeword rx_codeword at its
// receiver while all users transmit; quality of that one reconstruction.
MismatchResult mismatch_eval(const ModelParameters& params, const Codebook& book,
                             int tx_user, int rx_codeword, double snr_db,
                             std::uint64_t seed, const MismatchOptions& opts = {});

}  // namespace nocsim
