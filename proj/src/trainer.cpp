#include "nocsim/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

NsmDims ModelDims::nsm_dims() const {
    NsmDims d;
    d.channels = channels();
    d.latent = nsm_latent;
    d.length = codeword_length;
    d.depth = nsm_depth;
    d.tokens = tokens;
    return d;
}

void ModelDims::validate() const {
    if (image_dim < 1 || hidden < 1 || tokens < 1 || nsm_latent < 1 ||
        nsm_depth < 1 || codeword_length < 1)
        throw ConfigError("model dims must all be positive");
    if (feature_dim < 2 || feature_dim % 2 != 0)
        throw ConfigError("feature_dim must be even and >= 2");
    if (feature_dim % tokens != 0)
        throw ConfigError("tokens must divide feature_dim");
    nsm_dims().validate();
}

int ModelParameters::param_count() const {
    return codec.param_count() + tx.param_count() + rx.param_count();
}

std::vector<double> ModelParameters::to_vector() const {
    std::vector<double> v;
    v.reserve(param_count());
    codec.append_to(v);
    tx.append_to(v);
    rx.append_to(v);
    return v;
}

void ModelParameters::from_vector(const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != param_count())
        throw ShapeMismatch("ModelParameters::from_vector: size mismatch");
    std::size_t pos = codec.read_from(v, 0);
    pos = tx.read_from(v, pos);
    rx.read_from(v, pos);
}

void ModelParameters::set_zero() {
    codec.set_zero();
    tx.set_zero();
    rx.set_zero();
}

ModelParameters init_model(const ModelDims& dims, std::uint64_t seed) {
    dims.validate();
    ModelParameters p;
    p.dims = dims;
    p.codec = init_codec(dims.image_dim, dims.hidden, dims.feature_dim, seed);
    p.tx = init_nsm(dims.nsm_dims(), seed + 0x9e3779b97f4a7c15ULL);
    p.rx = init_nsm(dims.nsm_dims(), seed + 0x3c6ef372fe94f82aULL);
    return p;
}

void TrainConfig::validate() const {
    dims.validate();
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (!std::isfinite(clip_norm)) throw ConfigError("clip_norm must be finite");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (num_users < 1) throw ConfigError("num_users must be >= 1");
    if (num_users > codebook.users())
        throw ConfigError("num_users " + std::to_string(num_users) +
                          " exceeds codebook users " +
                          std::to_string(codebook.users()));
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (dataset_size < batch_size)
        throw ConfigError("dataset_size must be >= batch_size");
    if (!(snr_hi_db >= snr_lo_db)) throw ConfigError("snr range is inverted");
    if (codebook.length != dims.codeword_length)
        throw ConfigError("codebook length " + std::to_string(codebook.length) +
                          " does not match model codeword_length " +
                          std::to_string(dims.codeword_length));
}

namespace {

Eigen::MatrixXd to_tokens(const Eigen::VectorXd& f, int tokens, int channels) {
    Eigen::MatrixXd t(tokens, channels);
    for (int r = 0; r < tokens; ++r)
        for (int c = 0; c < channels; ++c) t(r, c) = f(r * channels + c);
    return t;
}

Eigen::VectorXd from_tokens(const Eigen::MatrixXd& t) {
    Eigen::VectorXd f(t.rows() * t.cols());
    for (int r = 0; r < t.rows(); ++r)
        for (int c = 0; c < t.cols(); ++c) f(r * t.cols() + c) = t(r, c);
    return f;
}

struct UserTxCache {
    CodecCache enc;
    Eigen::VectorXd feat;
    Eigen::MatrixXd tokens;
    NsmActivations acts;
    Eigen::MatrixXd out;
    Eigen::VectorXd v;   // flattened gate output
    Eigen::VectorXd vn;  // power-normalized transmit rails
};

struct UserRxCache {
    Eigen::VectorXd r;  // unpacked received rails
    Eigen::MatrixXd tokens;
    NsmActivations acts;
    Eigen::MatrixXd out;
    Eigen::VectorXd fhat;
    CodecCache dec;
    Eigen::VectorXd shat;
};

void forward_item(const ModelParameters& params, const Codebook& book,
                  const BatchItem& item, const std::vector<int>& rx_codewords,
                  std::vector<UserTxCache>& tx, std::vector<UserRxCache>& rx) {
    const ModelDims& dims = params.dims;
    const int n = static_cast<int>(item.images.size());
    if (item.channel.num_users() != n ||
        static_cast<int>(item.noise.size()) != n)
        throw ShapeMismatch("forward_item: item user counts disagree");
    if (n > book.users())
        throw ShapeMismatch("forward_item: more users than codewords");

    tx.assign(n, {});
    rx.assign(n, {});
    std::vector<Eigen::VectorXcd> z(n);
    for (int u = 0; u < n; ++u) {
        UserTxCache& t = tx[u];
        t.feat = encode(item.images[u], params.codec, &t.enc);
        t.tokens = to_tokens(t.feat, dims.tokens, dims.channels());
        t.out = nsm_forward(t.tokens, book.words[u], item.snr_db, params.tx,
                            &t.acts);
        t.v = from_tokens(t.out);
        t.vn = power_normalize(t.v);
        z[u] = pack_complex(t.vn);
    }
    for (int i = 0; i < n; ++i) {
        UserRxCache& r = rx[i];
        Eigen::VectorXcd y = item.noise[i];
        for (int j = 0; j < n; ++j) y += item.channel.gains(j, i) * z[j];
        const int cw = rx_codewords.empty() ? i : rx_codewords[i];
        r.r = unpack_complex(y);
        r.tokens = to_tokens(r.r, dims.tokens, dims.channels());
        r.out = nsm_forward(r.tokens, book.words[cw], item.snr_db, params.rx,
                            &r.acts);
        r.fhat = from_tokens(r.out);
        r.shat = decode(r.fhat, params.codec, &r.dec);
    }
}

}  // namespace

PipelineBatch make_batch(const TrainConfig& cfg,
                         const std::vector<Eigen::VectorXd>& dataset, Rng& data_rng,
                         Rng& channel_rng, Rng& noise_rng, Rng& snr_rng) {
    PipelineBatch batch(cfg.batch_size);
    const int symbols = cfg.dims.complex_symbols();
    for (auto& item : batch) {
        item.snr_db = snr_rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db);
        item.channel = draw_channel(cfg.channel, cfg.num_users, channel_rng);
        const double sigma2 = snr_to_sigma2(item.snr_db, 1.0);
        item.images.resize(cfg.num_users);
        item.noise.resize(cfg.num_users);
        for (int u = 0; u < cfg.num_users; ++u) {
            item.images[u] = dataset[data_rng.integer(dataset.size())];
            Eigen::VectorXcd n(symbols);
            for (int s = 0; s < symbols; ++s) n(s) = noise_rng.cgaussian(sigma2);
            item.noise[u] = std::move(n);
        }
    }
    return batch;
}

LossBreakdown pipeline_loss(const ModelParameters& params, const Codebook& book,
                            const PipelineBatch& batch, const LossWeights& weights,
                            ModelParameters* grad) {
    if (batch.empty()) throw ShapeMismatch("pipeline_loss: empty batch");
    const ModelDims& dims = params.dims;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    LossBreakdown acc;

    std::vector<UserTxCache> tx;
    std::vector<UserRxCache> rx;
    for (const BatchItem& item : batch) {
        const int n = static_cast<int>(item.images.size());
        forward_item(params, book, item, {}, tx, rx);

        std::vector<Eigen::VectorXd> recon(n), features(n);
        for (int u = 0; u < n; ++u) {
            recon[u] = rx[u].shat;
            features[u] = tx[u].vn;
        }
        const LossBreakdown lb =
            total_loss(item.images, recon, features, weights);
        acc.recon += lb.recon * inv_batch;
        acc.fair += lb.fair * inv_batch;
        acc.orth += lb.orth * inv_batch;
        acc.total += lb.total * inv_batch;
        if (!grad) continue;

        std::vector<Eigen::VectorXd> d_shat =
            recon_fair_grad(item.images, recon, weights.lambda_fair);
        std::vector<Eigen::VectorXd> d_orth;
        if (n >= 2) d_orth = orth_grad(features);

        // Receive side: decoder -> gate net -> channel adjoint.
        std::vector<Eigen::VectorXcd> d_z(
            n, Eigen::VectorXcd::Zero(dims.complex_symbols()));
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd d_fhat = decode_backward(
                params.codec, rx[i].dec, d_shat[i] * inv_batch, grad->codec);
            const Eigen::MatrixXd d_rtok =
                nsm_backward(rx[i].tokens, params.rx, rx[i].acts,
                             to_tokens(d_fhat, dims.tokens, dims.channels()),
                             grad->rx);
            const Eigen::VectorXcd d_y = pack_complex(from_tokens(d_rtok));
            for (int j = 0; j < n; ++j)
                d_z[j] += std::conj(item.channel.gains(j, i)) * d_y;
        }
        // Transmit side: normalization -> gate net -> encoder.
        for (int u = 0; u < n; ++u) {
            Eigen::VectorXd d_vn = unpack_complex(d_z[u]);
            if (n >= 2)
                d_vn += (weights.lambda_orth * inv_batch) * d_orth[u];
            const Eigen::VectorXd d_v = power_normalize_backward(tx[u].v, d_vn);
            const Eigen::MatrixXd d_tok =
                nsm_backward(tx[u].tokens, params.tx, tx[u].acts,
                             to_tokens(d_v, dims.tokens, dims.channels()),
                             grad->tx);
            encode_backward(params.codec, tx[u].enc, from_tokens(d_tok),
                            grad->codec);
        }
    }
    return acc;
}

ItemForward pipeline_forward(const ModelParameters& params, const Codebook& book,
                             const BatchItem& item,
                             const std::vector<int>& rx_codewords) {
    std::vector<UserTxCache> tx;
    std::vector<UserRxCache> rx;
    forward_item(params, book, item, rx_codewords, tx, rx);
    const int n = static_cast<int>(item.images.size());
    ItemForward out;
    out.reconstructions.resize(n);
    out.mse_clamped.resize(n);
    out.tx_features.resize(n);
    for (int u = 0; u < n; ++u) {
        out.reconstructions[u] = rx[u].shat;
        const Eigen::VectorXd clamped =
            rx[u].shat.cwiseMax(0.0).cwiseMin(1.0);
        out.mse_clamped[u] = mse(item.images[u], clamped);
        out.tx_features[u] = tx[u].vn;
    }
    return out;
}

std::pair<ModelParameters, TrainReport> train(
    const TrainConfig& cfg,
    const std::function<void(int, const LossBreakdown&)>& epoch_observer) {
    cfg.validate();
    if (cfg.dims.image_dim != kImagePixels)
        throw ConfigError("train: image_dim " + std::to_string(cfg.dims.image_dim) +
                          " does not match the " + std::to_string(kImagePixels) +
                          "-pixel synthetic dataset");
    const auto start = std::chrono::steady_clock::now();

    ModelParameters params = init_model(cfg.dims, cfg.seed);
    const std::vector<Eigen::VectorXd> dataset =
        synth_dataset(cfg.dataset_size, cfg.seed + 1);
    Rng data_rng(cfg.seed + 2);
    Rng channel_rng(cfg.seed + 3);
    Rng noise_rng(cfg.seed + 4);
    Rng snr_rng(cfg.seed + 5);

    const int steps_per_epoch = cfg.dataset_size / cfg.batch_size;
    TrainReport report;
    report.seed = cfg.seed;
    report.trace.reserve(cfg.epochs);

    ModelParameters grad = params;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        LossBreakdown epoch_acc;
        for (int step = 0; step < steps_per_epoch; ++step) {
            const PipelineBatch batch =
                make_batch(cfg, dataset, data_rng, channel_rng, noise_rng, snr_rng);
            grad.set_zero();
            LossBreakdown lb;
            try {
                lb = pipeline_loss(params, cfg.codebook, batch, cfg.weights, &grad);
            } catch (const NonFiniteActivation& e) {
                throw DivergenceDetected("training diverged at epoch " +
                                         std::to_string(epoch) + " step " +
                                         std::to_string(step) + ": " + e.what());
            } catch (const DegenerateFeature& e) {
                // a collapsed feature is a dead model, not a shape bug
                throw DivergenceDetected("training collapsed at epoch " +
                                         std::to_string(epoch) + " step " +
                                         std::to_string(step) + ": " + e.what());
            }
            if (!std::isfinite(lb.total))
                throw DivergenceDetected("training diverged at epoch " +
                                         std::to_string(epoch) + " step " +
                                         std::to_string(step));
            std::vector<double> p = params.to_vector();
            const std::vector<double> g = grad.to_vector();
            // Loss spikes near sharp minima otherwise throw the iterate onto
            // a plateau it cannot leave; cap the step, keep the direction.
            double scale = cfg.learning_rate;
            if (cfg.clip_norm > 0) {
                double sq = 0;
                for (const double d : g) sq += d * d;
                const double norm = std::sqrt(sq);
                if (!std::isfinite(norm))
                    throw DivergenceDetected("training diverged at epoch " +
                                             std::to_string(epoch) + " step " +
                                             std::to_string(step) +
                                             ": gradient overflow");
                if (norm > cfg.clip_norm) scale *= cfg.clip_norm / norm;
            }
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * g[i];
            params.from_vector(p);

            epoch_acc.recon += lb.recon / steps_per_epoch;
            epoch_acc.fair += lb.fair / steps_per_epoch;
            epoch_acc.orth += lb.orth / steps_per_epoch;
            epoch_acc.total += lb.total / steps_per_epoch;
        }
        report.trace.push_back(epoch_acc);
        if (epoch_observer) epoch_observer(epoch, epoch_acc);
    }

    EvalConfig ec;
    ec.snr_grid = {0.5 * (cfg.snr_lo_db + cfg.snr_hi_db)};
    ec.channel = cfg.channel;
    ec.num_users = cfg.num_users;
    ec.batches = 4;
    ec.batch_size = cfg.batch_size;
    ec.seed = cfg.seed + 6;
    const MetricsReport mr = evaluate(params, cfg.codebook, ec);
    report.final_angles_deg = mr.angles_deg;
    report.per_user_mse = mr.mse_grid.empty() ? std::vector<double>{}
                                              : mr.mse_grid[0];
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return {std::move(params), std::move(report)};
}

namespace {

// Items are regenerated identically for every SNR point: the noise is drawn
// at unit variance and scaled, so SNR sweeps are paired comparisons.
PipelineBatch eval_batch(const ModelParameters& params, const ChannelKind& kind,
                         int num_users, int batch_size, double snr_db,
                         const std::vector<Eigen::VectorXd>& dataset,
                         Rng& data_rng, Rng& channel_rng, Rng& noise_rng) {
    PipelineBatch batch(batch_size);
    const int symbols = params.dims.complex_symbols();
    const double sigma = std::sqrt(snr_to_sigma2(snr_db, 1.0));
    for (auto& item : batch) {
        item.snr_db = snr_db;
        item.channel = draw_channel(kind, num_users, channel_rng);
        item.images.resize(num_users);
        item.noise.resize(num_users);
        for (int u = 0; u < num_users; ++u) {
            item.images[u] = dataset[data_rng.integer(dataset.size())];
            Eigen::VectorXcd n(symbols);
            for (int s = 0; s < symbols; ++s) n(s) = noise_rng.cgaussian(1.0);
            item.noise[u] = sigma * n;
        }
    }
    return batch;
}

}  // namespace

MetricsReport evaluate(const ModelParameters& params, const Codebook& book,
                       const EvalConfig& cfg) {
    if (cfg.num_users < 1 || cfg.num_users > book.users())
        throw ConfigError("evaluate: num_users out of range");
    if (cfg.snr_grid.empty()) throw ConfigError("evaluate: empty snr grid");
    if (params.dims.image_dim != kImagePixels)
        throw ConfigError("evaluate: image_dim " +
                          std::to_string(params.dims.image_dim) +
                          " does not match the " + std::to_string(kImagePixels) +
                          "-pixel synthetic dataset");

    const std::vector<Eigen::VectorXd> dataset =
        synth_dataset(cfg.batches * cfg.batch_size * cfg.num_users, cfg.seed + 1);

    MetricsReport report;
    report.snr_grid = cfg.snr_grid;
    report.symbols_per_image = params.dims.complex_symbols();
    report.subspace_rank = cfg.subspace_rank;

    std::vector<std::vector<Eigen::VectorXd>> features(cfg.num_users);
    double orth_acc = 0;
    long orth_count = 0;
    for (double snr : cfg.snr_grid) {
        Rng data_rng(cfg.seed + 2);
        Rng channel_rng(cfg.seed + 3);
        Rng noise_rng(cfg.seed + 4);
        std::vector<double> mse_acc(cfg.num_users, 0.0);
        for (int b = 0; b < cfg.batches; ++b) {
            const PipelineBatch batch =
                eval_batch(params, cfg.channel, cfg.num_users, cfg.batch_size,
                           snr, dataset, data_rng, channel_rng, noise_rng);
            for (const BatchItem& item : batch) {
                const ItemForward fwd = pipeline_forward(params, book, item);
                for (int u = 0; u < cfg.num_users; ++u) {
                    mse_acc[u] += fwd.mse_clamped[u];
                    features[u].push_back(fwd.tx_features[u]);
                }
                if (cfg.num_users >= 2) {
                    orth_acc += orth_loss(fwd.tx_features);
                    ++orth_count;
                }
            }
        }
        const double scale = 1.0 / (cfg.batches * cfg.batch_size);
        std::vector<double> mse_row(cfg.num_users), psnr_row(cfg.num_users);
        for (int u = 0; u < cfg.num_users; ++u) {
            mse_row[u] = mse_acc[u] * scale;
            psnr_row[u] = mse_row[u] < 1e-12
                              ? 120.0
                              : 10.0 * std::log10(1.0 / mse_row[u]);
        }
        report.mse_grid.push_back(std::move(mse_row));
        report.psnr_grid.push_back(std::move(psnr_row));
    }

    report.cosine = cosine_matrix(features);
    report.angles_deg.resize(cfg.num_users, cfg.num_users);
    for (int i = 0; i < cfg.num_users; ++i)
        for (int j = 0; j < cfg.num_users; ++j) {
            const double c = std::clamp(report.cosine(i, j), -1.0, 1.0);
            report.angles_deg(i, j) = i == j ? 0.0 : std::acos(c) * 180.0 / kPi;
        }
    report.orth_value = orth_count ? orth_acc / orth_count : 0.0;

    if (cfg.num_users >= 2) {
        std::vector<SubspaceEstimate> subs(cfg.num_users);
        for (int u = 0; u < cfg.num_users; ++u)
            subs[u] = estimate_subspace(features[u], cfg.subspace_rank, u);
        report.cross_projection =
            Eigen::MatrixXd::Zero(cfg.num_users, cfg.num_users);
        for (int i = 0; i < cfg.num_users; ++i)
            for (int j = 0; j < cfg.num_users; ++j) {
                double acc = 0;
                for (const auto& z : features[i])
                    acc += projection_power(z.normalized(), subs[j]);
                report.cross_projection(i, j) =
                    acc / static_cast<double>(features[i].size());
            }
    }
    return report;
}

MismatchResult mismatch_eval(const ModelParameters& params, const Codebook& book,
                             int tx_user, int rx_codeword, double snr_db,
                             std::uint64_t seed, const MismatchOptions& opts) {
    const int n = opts.num_users > 0 ? opts.num_users : book.users();
    if (tx_user < 0 || tx_user >= n)
        throw ConfigError("mismatch_eval: tx_user out of range");
    if (rx_codeword < 0 || rx_codeword >= book.users())
        throw ConfigError("mismatch_eval: rx_codeword out of range");
    if (params.dims.image_dim != kImagePixels)
        throw ConfigError("mismatch_eval: image_dim " +
                          std::to_string(params.dims.image_dim) +
                          " does not match the " + std::to_string(kImagePixels) +
                          "-pixel synthetic dataset");

    const std::vector<Eigen::VectorXd> dataset =
        synth_dataset(opts.batches * opts.batch_size * n, seed + 1);
    Rng data_rng(seed + 2);
    Rng channel_rng(seed + 3);
    Rng noise_rng(seed + 4);

    std::vector<int> rx_codewords(n);
    for (int i = 0; i < n; ++i) rx_codewords[i] = i;
    rx_codewords[tx_user] = rx_codeword;

    double mse_acc = 0;
    long count = 0;
    for (int b = 0; b < opts.batches; ++b) {
        const PipelineBatch batch =
            eval_batch(params, opts.channel, n, opts.batch_size, snr_db, dataset,
                       data_rng, channel_rng, noise_rng);
        for (const BatchItem& item : batch) {
            const ItemForward fwd =
                pipeline_forward(params, book, item, rx_codewords);
            mse_acc += fwd.mse_clamped[tx_user];
            ++count;
        }
    }
    MismatchResult res;
    res.mse = mse_acc / static_cast<double>(count);
    res.psnr = res.mse < 1e-12 ? 120.0 : 10.0 * std::log10(1.0 / res.mse);
    return res;
}

}  // namespace nocsim
