#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nocsim/metrics.hpp"
#include "nocsim/trainer.hpp"

namespace nocsim {

// Parsed experiment description. JSON sections: codebook, channel, model,
// train, metrics; unknown keys are rejected so a stale config never runs
// silently with defaults.
struct ExperimentConfig {
    NocGenConfig codebook;
    ChannelKind channel;
    std::vector<double> snr_grid = {0, 5, 10, 15};
    ModelDims model;

    double learning_rate = 1e-2;
    double clip_norm = 1.0;
    int epochs = 40;
    int num_users = 2;
    int batch_size = 16;
    int dataset_size = 256;
    double snr_lo_db = 0;
    double snr_hi_db = 15;
    std::uint64_t train_seed = 1;
    LossWeights weights;

    MetricsConfig metrics;
    int eval_batches = 8;
    int eval_batch_size = 16;
    std::uint64_t eval_seed = 1;

    std::string output_dir = "out";
    std::string config_hash;  // FNV-1a of the canonical JSON dump

    TrainConfig train_config(const Codebook& book) const;
    EvalConfig eval_config() const;
    std::string seeds_line() const;  // "codebook:..,train:..,eval:.."
};

ExperimentConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& data);
std::string fnv1a64_hex(const std::string& data);

// Shortest round-trip decimal form.
std::string format_double(double v);

// "lo:step:hi" (inclusive), comma list, or a single value.
std::vector<double> parse_snr_grid(const std::string& text);

struct Checkpoint {
    ModelParameters params;
    Codebook book;
    std::string config_hash;
    std::uint64_t train_seed = 0;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// All report files start with "# config_hash=..." and "# seeds=..." so any
// result can be traced back to the exact run that produced it.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
              const std::string& seeds, const std::string& header);
    void row(const std::vector<std::string>& cells);
    void close();

  private:
    std::string buffer_;
    std::filesystem::path path_;
};

void write_loss_trace_csv(const std::filesystem::path& path,
                          const std::vector<LossBreakdown>& trace,
                          const std::string& config_hash,
                          const std::string& seeds);
void write_train_report_json(const std::filesystem::path& path,
                             const TrainReport& report,
                             const std::string& config_hash,
                             const std::string& seeds);
void write_metrics_csv(const std::filesystem::path& path,
                       const MetricsReport& report,
                       const std::string& config_hash, const std::string& seeds);
void write_metrics_report_json(const std::filesystem::path& path,
                               const MetricsReport& report,
                               const std::string& config_hash,
                               const std::string& seeds);
void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& matrix,
                      const std::string& config_hash, const std::string& seeds);

}  // namespace nocsim
