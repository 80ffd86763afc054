// Python bindings for the core operations: codebook construction, loss
// terms, classical baselines and the train/evaluate pipeline.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "nocsim/baselines.hpp"
#include "nocsim/channel.hpp"
#include "nocsim/codebook.hpp"
#include "nocsim/errors.hpp"
#include "nocsim/losses.hpp"
#include "nocsim/metrics.hpp"
#include "nocsim/trainer.hpp"

namespace py = pybind11;
using namespace nocsim;

namespace {

std::vector<std::vector<double>> to_lists(const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> out(m.rows(),
                                         std::vector<double>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

std::vector<Eigen::VectorXd> to_vectors(
    const std::vector<std::vector<double>>& rows) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(r.size()));
        for (std::size_t i = 0; i < r.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = r[i];
        out.push_back(std::move(v));
    }
    return out;
}

py::dict book_to_dict(const Codebook& book) {
    py::dict d;
    d["length"] = book.length;
    d["theta_deg"] = book.theta_deg;
    d["words"] = book.words;
    const auto angles = pairwise_angles(book);
    d["angles_deg"] = angles;
    return d;
}

py::dict generate_codebook(int length, int users, double theta_deg,
                           std::uint64_t seed, int iters, int tolerance,
                           bool random_rows) {
    NocGenConfig cfg;
    cfg.length = length;
    cfg.num_users = users;
    cfg.theta_deg = theta_deg;
    cfg.seed = seed;
    cfg.iters = iters;
    cfg.tolerance = tolerance;
    cfg.random_rows = random_rows;
    return book_to_dict(generate_noc(cfg));
}

std::vector<double> cdma_ber(int users, double snr_db, long bits,
                             std::uint64_t seed, int spreading) {
    int n = spreading;
    if (n == 0) {
        n = 1;
        while (n < users) n *= 2;
    }
    std::vector<std::vector<int>> streams;
    for (int u = 0; u < users; ++u)
        streams.push_back(random_bits(bits, seed + static_cast<unsigned>(u)));
    const CdmaResult res =
        cdma_roundtrip(streams, walsh_matrix(n), snr_db, seed + 1000);
    return res.ber;
}

std::pair<double, double> noma_ber(double alpha, double snr_db, long bits,
                                   std::uint64_t seed, bool decode_weak_first) {
    NomaConfig cfg;
    cfg.alpha = alpha;
    cfg.snr1_db = snr_db;
    cfg.snr2_db = snr_db;
    cfg.seed = seed + 2;
    cfg.decode_weak_first = decode_weak_first;
    const NomaResult res = noma_sic_roundtrip(random_bits(bits, seed),
                                              random_bits(bits, seed + 1), cfg);
    return {res.ber1, res.ber2};
}

py::dict train_and_evaluate(int length, int users, double theta_deg, int hidden,
                            int feature_dim, int tokens, int nsm_latent,
                            int nsm_depth, double learning_rate,
                            double clip_norm, int epochs,
                            int batch_size, int dataset_size, double snr_lo_db,
                            double snr_hi_db, const std::string& channel,
                            double k_factor, std::uint64_t seed,
                            std::vector<double> snr_grid, int eval_batches,
                            int eval_batch_size, std::uint64_t eval_seed,
                            int subspace_rank, double lambda_fair,
                            double lambda_orth, std::uint64_t codebook_seed) {
    NocGenConfig bc;
    bc.length = length;
    bc.num_users = users;
    bc.theta_deg = theta_deg;
    bc.seed = codebook_seed;
    const Codebook book = generate_noc(bc);

    TrainConfig cfg;
    cfg.dims.hidden = hidden;
    cfg.dims.feature_dim = feature_dim;
    cfg.dims.tokens = tokens;
    cfg.dims.nsm_latent = nsm_latent;
    cfg.dims.nsm_depth = nsm_depth;
    cfg.dims.codeword_length = length;
    cfg.codebook = book;
    cfg.num_users = users;
    cfg.learning_rate = learning_rate;
    cfg.clip_norm = clip_norm;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.dataset_size = dataset_size;
    cfg.snr_lo_db = snr_lo_db;
    cfg.snr_hi_db = snr_hi_db;
    cfg.channel = channel_kind_from_string(channel, k_factor);
    cfg.seed = seed;
    cfg.weights.lambda_fair = lambda_fair;
    cfg.weights.lambda_orth = lambda_orth;

    const auto [params, report] = train(cfg);

    EvalConfig ec;
    ec.snr_grid = std::move(snr_grid);
    ec.channel = cfg.channel;
    ec.num_users = users;
    ec.batches = eval_batches;
    ec.batch_size = eval_batch_size;
    ec.seed = eval_seed;
    ec.subspace_rank = subspace_rank;
    const MetricsReport metrics = evaluate(params, book, ec);

    py::dict out;
    py::list trace;
    for (const LossBreakdown& lb : report.trace) {
        py::dict e;
        e["recon"] = lb.recon;
        e["fair"] = lb.fair;
        e["orth"] = lb.orth;
        e["total"] = lb.total;
        trace.append(e);
    }
    out["trace"] = trace;
    out["per_user_mse"] = report.per_user_mse;
    out["codebook"] = book_to_dict(book);
    out["snr_grid"] = metrics.snr_grid;
    out["mse"] = metrics.mse_grid;
    out["psnr"] = metrics.psnr_grid;
    out["cosine"] = to_lists(metrics.cosine);
    out["angles_deg"] = to_lists(metrics.angles_deg);
    out["cross_projection"] = to_lists(metrics.cross_projection);
    out["orth_value"] = metrics.orth_value;
    out["symbols_per_image"] = metrics.symbols_per_image;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gated multi-user image transmission over fixed-angle sign "
              "codebooks: core operations";

    py::register_exception<Error>(m, "Error");

    m.def("walsh",
          [](int order) { return walsh_matrix(order).rows; },
          py::arg("order"),
          "Mutually orthogonal +-1 rows of the given power-of-two order");

    m.def("round_to_parity", &round_to_parity, py::arg("x"), py::arg("length"),
          "Nearest integer to x with the same parity as length (ties down)");

    m.def("generate_codebook", &generate_codebook, py::arg("length"),
          py::arg("users"), py::arg("theta_deg"), py::arg("seed") = 0,
          py::arg("iters") = 100, py::arg("tolerance") = 2,
          py::arg("random_rows") = false,
          "Fixed-angle +-1 codebook via greedy sign flips; returns a dict "
          "with words and pairwise angles");

    m.def("orth_loss",
          [](const std::vector<std::vector<double>>& features) {
              return orth_loss(to_vectors(features));
          },
          py::arg("features"),
          "Mean squared cosine similarity over unordered feature pairs");

    m.def("fairness_loss", &fairness_loss, py::arg("per_user_mse"),
          "Mean absolute deviation of per-user MSEs from their mean");

    m.def("mse",
          [](const std::vector<double>& a, const std::vector<double>& b) {
              return mse(Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()),
                         Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
          },
          py::arg("a"), py::arg("b"));

    m.def("psnr",
          [](const std::vector<double>& a, const std::vector<double>& b,
             double max_value) {
              return psnr(Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()),
                          Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()),
                          max_value);
          },
          py::arg("original"), py::arg("reconstruction"),
          py::arg("max_value") = 1.0);

    m.def("bpsk_ber_theory", &bpsk_awgn_ber_theory, py::arg("snr_db"),
          "Coherent BPSK error rate over AWGN, Q(sqrt(2 * 10^(snr/10)))");

    m.def("cdma_ber", &cdma_ber, py::arg("users"), py::arg("snr_db"),
          py::arg("bits"), py::arg("seed") = 1, py::arg("spreading") = 0,
          "Per-user BER of a synchronous Walsh-spread BPSK round trip; "
          "spreading 0 picks the smallest power of two >= users");

    m.def("noma_ber", &noma_ber, py::arg("alpha"), py::arg("snr_db"),
          py::arg("bits"), py::arg("seed") = 1,
          py::arg("decode_weak_first") = false,
          "(ber1, ber2) of the two-user power-domain round trip with "
          "successive cancellation");

    m.def("train_and_evaluate", &train_and_evaluate, py::arg("length") = 128,
          py::arg("users") = 2, py::arg("theta_deg") = 50,
          py::arg("hidden") = 128, py::arg("feature_dim") = 64,
          py::arg("tokens") = 8, py::arg("nsm_latent") = 16,
          py::arg("nsm_depth") = 10, py::arg("learning_rate") = 1e-2,
          py::arg("clip_norm") = 1.0, py::arg("epochs") = 40,
          py::arg("batch_size") = 16,
          py::arg("dataset_size") = 256, py::arg("snr_lo_db") = 0.0,
          py::arg("snr_hi_db") = 15.0, py::arg("channel") = "awgn",
          py::arg("k_factor") = 0.0, py::arg("seed") = 1,
          py::arg("snr_grid") = std::vector<double>{0, 5, 10, 15},
          py::arg("eval_batches") = 8, py::arg("eval_batch_size") = 16,
          py::arg("eval_seed") = 1, py::arg("subspace_rank") = 4,
          py::arg("lambda_fair") = 0.01, py::arg("lambda_orth") = 0.01,
          py::arg("codebook_seed") = 0,
          "Trains the gated pipeline on synthetic 8x8 images and returns the "
          "loss trace plus the evaluation report as plain dicts and lists");
}
