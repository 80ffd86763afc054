#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nocsim/baselines.hpp"
#include "nocsim/codebook.hpp"
#include "nocsim/errors.hpp"
#include "nocsim/experiment.hpp"
#include "nocsim/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CodebookArgs {
    int length = 128;
    int users = 2;
    double angle = 50;
    std::uint64_t seed = 1;
    int iters = 100;
    int tolerance = 2;
    bool random_rows = false;
    std::string out = "codebook.txt";
};

struct TrainArgs {
    std::string config;
};

struct EvalArgs {
    std::string config;
    std::string checkpoint;
};

struct MismatchArgs {
    std::string config;
    std::string checkpoint;
    double snr_db = 10;
};

struct BaselineArgs {
    std::string scheme;
    int users = 2;
    std::string snr = "0:2:10";
    long bits = 100000;
    std::uint64_t seed = 1;
    double alpha = 0.8;
    int spreading = 0;  // 0 picks the smallest power of two >= users
    std::string out = "baseline.csv";
};

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void append_meta(const fs::path& path, const std::string& config_hash,
                 const std::string& seeds) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw nocsim::IoError("cannot append to " + path.string());
    out << "# config_hash=" << config_hash << "\n# seeds=" << seeds << "\n";
}

fs::path resolve_checkpoint(const std::string& flag,
                            const nocsim::ExperimentConfig& cfg) {
    if (!flag.empty()) return flag;
    return fs::path(cfg.output_dir) / "checkpoint.json";
}

// Checkpoints only pair with configs that describe the same model.
void require_same_dims(const nocsim::Checkpoint& ck,
                       const nocsim::ExperimentConfig& cfg) {
    if (!(ck.params.dims == cfg.model))
        throw nocsim::ShapeMismatch(
            "checkpoint dims do not match the config model section");
}

int run_codebook(const CodebookArgs& a) {
    nocsim::NocGenConfig cfg;
    cfg.length = a.length;
    cfg.num_users = a.users;
    cfg.theta_deg = a.angle;
    cfg.iters = a.iters;
    cfg.tolerance = a.tolerance;
    cfg.seed = a.seed;
    cfg.random_rows = a.random_rows;

    const nocsim::Codebook book = nocsim::generate_noc(cfg);
    nocsim::save_codebook(book, a.out);

    const json args{{"cmd", "codebook"},     {"length", a.length},
                    {"users", a.users},      {"angle", a.angle},
                    {"seed", a.seed},        {"iters", a.iters},
                    {"tolerance", a.tolerance}, {"random_rows", a.random_rows}};
    append_meta(a.out, nocsim::fnv1a64_hex(args.dump()),
                "codebook:" + std::to_string(a.seed));

    std::cout << "wrote " << a.out << " (L=" << book.length
              << " K=" << book.users() << " theta=" << a.angle << ")\n";
    for (int i = 0; i < book.users(); ++i)
        for (int j = i + 1; j < book.users(); ++j) {
            const long d = book.dot(i, j);
            const double deg =
                nocsim::pairwise_angles(book)[i][j];
            std::cout << "pair (" << i + 1 << "," << j + 1 << "): dot " << d
                      << " angle " << fixed3(deg) << "\n";
        }
    return 0;
}

int run_train(const TrainArgs& a) {
    const nocsim::ExperimentConfig cfg = nocsim::load_config(a.config);
    fs::create_directories(cfg.output_dir);
    const fs::path out_dir(cfg.output_dir);

    const nocsim::Codebook book = nocsim::generate_noc(cfg.codebook);
    const nocsim::TrainConfig tcfg = cfg.train_config(book);

    std::vector<nocsim::LossBreakdown> trace;
    trace.reserve(static_cast<std::size_t>(tcfg.epochs));
    const auto observer = [&](int epoch, const nocsim::LossBreakdown& lb) {
        trace.push_back(lb);
        std::cout << "epoch " << epoch + 1 << "/" << tcfg.epochs << " total "
                  << nocsim::format_double(lb.total) << " recon "
                  << nocsim::format_double(lb.recon) << "\n";
    };

    try {
        auto [params, report] = nocsim::train(tcfg, observer);

        nocsim::Checkpoint ck;
        ck.params = std::move(params);
        ck.book = book;
        ck.config_hash = cfg.config_hash;
        ck.train_seed = cfg.train_seed;
        nocsim::save_checkpoint(ck, out_dir / "checkpoint.json");
        nocsim::write_train_report_json(out_dir / "train_report.json", report,
                                        cfg.config_hash, cfg.seeds_line());
        nocsim::write_loss_trace_csv(out_dir / "loss_trace.csv", report.trace,
                                     cfg.config_hash, cfg.seeds_line());
        std::cout << "train complete: " << report.trace.size()
                  << " epochs, final total "
                  << nocsim::format_double(report.trace.back().total)
                  << ", wall " << fixed3(report.wall_clock_seconds) << "s\n";
        return 0;
    } catch (const nocsim::DivergenceDetected&) {
        // Keep whatever finished so the failure point is inspectable.
        nocsim::write_loss_trace_csv(out_dir / "loss_trace.csv", trace,
                                     cfg.config_hash, cfg.seeds_line());
        throw;
    }
}

int run_eval(const EvalArgs& a) {
    const nocsim::ExperimentConfig cfg = nocsim::load_config(a.config);
    const nocsim::Checkpoint ck =
        nocsim::load_checkpoint(resolve_checkpoint(a.checkpoint, cfg));
    require_same_dims(ck, cfg);

    nocsim::EvalConfig ecfg = cfg.eval_config();
    if (ecfg.num_users > ck.book.users())
        throw nocsim::ConfigError("eval needs " + std::to_string(ecfg.num_users) +
                                  " users but the checkpoint codebook has " +
                                  std::to_string(ck.book.users()));

    const nocsim::MetricsReport report =
        nocsim::evaluate(ck.params, ck.book, ecfg);

    fs::create_directories(cfg.output_dir);
    const fs::path out_dir(cfg.output_dir);
    const std::string seeds = cfg.seeds_line();
    nocsim::write_metrics_csv(out_dir / "metrics.csv", report, cfg.config_hash,
                              seeds);
    nocsim::write_metrics_report_json(out_dir / "metrics_report.json", report,
                                      cfg.config_hash, seeds);
    nocsim::write_matrix_csv(out_dir / "cosine.csv", report.cosine,
                             cfg.config_hash, seeds);
    nocsim::write_matrix_csv(out_dir / "angles.csv", report.angles_deg,
                             cfg.config_hash, seeds);
    nocsim::write_matrix_csv(out_dir / "cross_projection.csv",
                             report.cross_projection, cfg.config_hash, seeds);

    for (std::size_t s = 0; s < report.snr_grid.size(); ++s) {
        double mean_psnr = 0;
        for (double p : report.psnr_grid[s]) mean_psnr += p;
        mean_psnr /= static_cast<double>(report.psnr_grid[s].size());
        std::cout << "snr " << nocsim::format_double(report.snr_grid[s])
                  << " dB: mean psnr " << fixed3(mean_psnr) << " dB\n";
    }
    std::cout << "orth value " << nocsim::format_double(report.orth_value)
              << ", symbols per image " << report.symbols_per_image << "\n";
    return 0;
}

int run_mismatch(const MismatchArgs& a) {
    const nocsim::ExperimentConfig cfg = nocsim::load_config(a.config);
    const nocsim::Checkpoint ck =
        nocsim::load_checkpoint(resolve_checkpoint(a.checkpoint, cfg));
    require_same_dims(ck, cfg);

    nocsim::MismatchOptions opts;
    opts.channel = cfg.channel;
    opts.num_users = 0;  // every codebook user transmits
    opts.batches = cfg.eval_batches;
    opts.batch_size = cfg.eval_batch_size;

    const int k = ck.book.users();
    Eigen::MatrixXd psnr_grid(k, k);
    fs::create_directories(cfg.output_dir);
    const fs::path out_dir(cfg.output_dir);
    const std::string seeds = cfg.seeds_line();

    nocsim::CsvWriter csv(out_dir / "mismatch.csv", cfg.config_hash, seeds,
                          "tx_user,rx_codeword,psnr,mse");
    double matched_min = 1e300, mismatched_max = -1e300;
    for (int tx = 0; tx < k; ++tx)
        for (int rx = 0; rx < k; ++rx) {
            const nocsim::MismatchResult r = nocsim::mismatch_eval(
                ck.params, ck.book, tx, rx, a.snr_db, cfg.eval_seed, opts);
            psnr_grid(tx, rx) = r.psnr;
            csv.row({std::to_string(tx + 1), std::to_string(rx + 1),
                     nocsim::format_double(r.psnr), nocsim::format_double(r.mse)});
            if (tx == rx)
                matched_min = std::min(matched_min, r.psnr);
            else
                mismatched_max = std::max(mismatched_max, r.psnr);
        }
    csv.close();
    nocsim::write_matrix_csv(out_dir / "mismatch_grid.csv", psnr_grid,
                             cfg.config_hash, seeds);

    std::cout << "mismatch grid at " << nocsim::format_double(a.snr_db)
              << " dB (psnr, rows tx / cols rx codeword):\n";
    for (int tx = 0; tx < k; ++tx) {
        for (int rx = 0; rx < k; ++rx)
            std::cout << (rx ? " " : "") << fixed3(psnr_grid(tx, rx));
        std::cout << "\n";
    }
    if (k > 1)
        std::cout << "worst matched " << fixed3(matched_min)
                  << " dB, best mismatched " << fixed3(mismatched_max)
                  << " dB, gap " << fixed3(matched_min - mismatched_max)
                  << " dB\n";
    return 0;
}

int run_baseline(const BaselineArgs& a) {
    const std::vector<double> grid = nocsim::parse_snr_grid(a.snr);
    const json args{{"cmd", "baseline"},   {"scheme", a.scheme},
                    {"users", a.users},    {"snr", a.snr},
                    {"bits", a.bits},      {"seed", a.seed},
                    {"alpha", a.alpha},    {"spreading", a.spreading}};
    const std::string hash = nocsim::fnv1a64_hex(args.dump());
    nocsim::CsvWriter csv(a.out, hash, "baseline:" + std::to_string(a.seed),
                          "scheme,users,snr_db,bits,errors,ber,symbols_per_bit");

    if (a.bits < 1) throw nocsim::ConfigError("baseline: --bits must be >= 1");
    long rows = 0;
    if (a.scheme == "cdma" || a.scheme == "bpsk") {
        const bool bpsk = a.scheme == "bpsk";
        const int users = bpsk ? 1 : a.users;
        if (users < 1)
            throw nocsim::ConfigError("baseline: --users must be >= 1");
        int spreading = bpsk ? 1 : a.spreading;
        if (spreading == 0) {
            spreading = 1;
            while (spreading < users) spreading *= 2;
        }
        const nocsim::WalshMatrix walsh = nocsim::walsh_matrix(spreading);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            std::vector<std::vector<int>> streams;
            streams.reserve(static_cast<std::size_t>(users));
            for (int u = 0; u < users; ++u)
                streams.push_back(nocsim::random_bits(
                    a.bits, a.seed + s * 1009 + static_cast<std::uint64_t>(u)));
            const nocsim::CdmaResult r = nocsim::cdma_roundtrip(
                streams, walsh, grid[s], a.seed + s * 7919);
            for (int u = 0; u < users; ++u, ++rows)
                csv.row({a.scheme, std::to_string(u + 1),
                         nocsim::format_double(grid[s]), std::to_string(a.bits),
                         std::to_string(r.errors[u]),
                         nocsim::format_double(r.ber[u]),
                         std::to_string(r.spreading)});
        }
    } else if (a.scheme == "noma") {
        if (a.users != 2)
            throw nocsim::ConfigError("baseline: noma is a 2-user scheme");
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const auto bits1 = nocsim::random_bits(a.bits, a.seed + s * 1009 + 1);
            const auto bits2 = nocsim::random_bits(a.bits, a.seed + s * 1009 + 2);
            nocsim::NomaConfig ncfg;
            ncfg.alpha = a.alpha;
            ncfg.snr1_db = grid[s];
            ncfg.snr2_db = grid[s];
            ncfg.seed = a.seed + s * 7919;
            const nocsim::NomaResult r =
                nocsim::noma_sic_roundtrip(bits1, bits2, ncfg);
            csv.row({"noma", "1", nocsim::format_double(grid[s]),
                     std::to_string(a.bits), std::to_string(r.errors1),
                     nocsim::format_double(r.ber1), "1"});
            csv.row({"noma", "2", nocsim::format_double(grid[s]),
                     std::to_string(a.bits), std::to_string(r.errors2),
                     nocsim::format_double(r.ber2), "1"});
            rows += 2;
        }
    } else {
        throw nocsim::ConfigError("baseline: unknown scheme '" + a.scheme +
                                  "' (expected cdma, noma or bpsk)");
    }
    csv.close();
    std::cout << "wrote " << a.out << " (" << rows << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-user semantic transmission simulator"};
    app.require_subcommand(1);

    CodebookArgs cb;
    CLI::App* sub_cb = app.add_subcommand(
        "codebook", "Generate a fixed-angle codebook and report its angles");
    sub_cb->add_option("--length", cb.length, "Codeword length (power of two)");
    sub_cb->add_option("--users", cb.users, "Number of codewords");
    sub_cb->add_option("--angle", cb.angle, "Target pairwise angle in degrees");
    sub_cb->add_option("--seed", cb.seed, "Seed for random row selection");
    sub_cb->add_option("--iters", cb.iters, "Max descent sweeps");
    sub_cb->add_option("--tolerance", cb.tolerance,
                       "Allowed dot-product miss at termination");
    sub_cb->add_flag("--random-rows", cb.random_rows,
                     "Start from random Walsh rows instead of rows 1..K");
    sub_cb->add_option("--out", cb.out, "Output file");

    TrainArgs tr;
    CLI::App* sub_tr =
        app.add_subcommand("train", "Train a model from a JSON config");
    sub_tr->add_option("--config", tr.config, "Config file")
        ->required()
        ->check(CLI::ExistingFile);

    EvalArgs ev;
    CLI::App* sub_ev =
        app.add_subcommand("eval", "Evaluate a checkpoint over the SNR grid");
    sub_ev->add_option("--config", ev.config, "Config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub_ev->add_option("--checkpoint", ev.checkpoint,
                       "Checkpoint file (default <output_dir>/checkpoint.json)")
        ->check(CLI::ExistingFile);

    MismatchArgs mm;
    CLI::App* sub_mm = app.add_subcommand(
        "mismatch", "Decode every user with every codeword at one SNR");
    sub_mm->add_option("--config", mm.config, "Config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub_mm->add_option("--checkpoint", mm.checkpoint,
                       "Checkpoint file (default <output_dir>/checkpoint.json)")
        ->check(CLI::ExistingFile);
    sub_mm->add_option("--snr", mm.snr_db, "Evaluation SNR in dB");

    BaselineArgs bl;
    CLI::App* sub_bl = app.add_subcommand(
        "baseline", "Run a classical multiple-access reference scheme");
    sub_bl->add_option("scheme", bl.scheme, "cdma, noma or bpsk")->required();
    sub_bl->add_option("--users", bl.users, "Number of users");
    sub_bl->add_option("--snr", bl.snr, "SNR grid: lo:step:hi, list or value");
    sub_bl->add_option("--bits", bl.bits, "Bits per user per SNR point");
    sub_bl->add_option("--seed", bl.seed, "Seed");
    sub_bl->add_option("--alpha", bl.alpha, "NOMA power share of user 1");
    sub_bl->add_option("--spreading", bl.spreading,
                       "CDMA spreading factor (default: smallest power of two "
                       ">= users)");
    sub_bl->add_option("--out", bl.out, "Output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (sub_cb->parsed()) return run_codebook(cb);
        if (sub_tr->parsed()) return run_train(tr);
        if (sub_ev->parsed()) return run_eval(ev);
        if (sub_mm->parsed()) return run_mismatch(mm);
        if (sub_bl->parsed()) return run_baseline(bl);
    } catch (const nocsim::TargetUnreachable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const nocsim::DivergenceDetected& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const nocsim::ShapeMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const nocsim::LengthMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const nocsim::NonPowerOfTwo& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nocsim::TooManyUsers& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nocsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nocsim::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nocsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
