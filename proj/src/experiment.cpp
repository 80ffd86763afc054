#include "nocsim/experiment.hpp"

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nocsim/errors.hpp"

namespace nocsim {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& section) {
    if (!j.is_object())
        throw ConfigError("config section '" + section + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("unknown key '" + it.key() + "' in config section '" +
                              section + "'");
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + std::string(key) + "': " + e.what());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

TrainConfig ExperimentConfig::train_config(const Codebook& book) const {
    TrainConfig t;
    t.learning_rate = learning_rate;
    t.clip_norm = clip_norm;
    t.epochs = epochs;
    t.num_users = num_users;
    t.batch_size = batch_size;
    t.dataset_size = dataset_size;
    t.snr_lo_db = snr_lo_db;
    t.snr_hi_db = snr_hi_db;
    t.channel = channel;
    t.codebook = book;
    t.seed = train_seed;
    t.weights = weights;
    t.dims = model;
    return t;
}

EvalConfig ExperimentConfig::eval_config() const {
    EvalConfig e;
    e.snr_grid = snr_grid;
    e.channel = channel;
    e.num_users = num_users;
    e.batches = eval_batches;
    e.batch_size = eval_batch_size;
    e.seed = eval_seed;
    e.subspace_rank = metrics.subspace_rank;
    return e;
}

std::string ExperimentConfig::seeds_line() const {
    return "codebook:" + std::to_string(codebook.seed) +
           ",train:" + std::to_string(train_seed) +
           ",eval:" + std::to_string(eval_seed);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    check_keys(j, {"version", "output_dir", "codebook", "channel", "model",
                   "train", "metrics"},
               "root");
    if (!j.contains("version") || !j.at("version").is_number_integer() ||
        j.at("version").get<int>() != 1)
        throw ConfigError("config must declare \"version\": 1");

    ExperimentConfig cfg;
    cfg.config_hash = fnv1a64_hex(j.dump());
    read_field(j, "output_dir", cfg.output_dir);

    if (j.contains("codebook")) {
        const json& c = j.at("codebook");
        check_keys(c, {"length", "users", "theta_deg", "iters", "tolerance",
                       "seed", "rows"},
                   "codebook");
        read_field(c, "length", cfg.codebook.length);
        read_field(c, "users", cfg.codebook.num_users);
        read_field(c, "theta_deg", cfg.codebook.theta_deg);
        read_field(c, "iters", cfg.codebook.iters);
        read_field(c, "tolerance", cfg.codebook.tolerance);
        read_field(c, "seed", cfg.codebook.seed);
        read_field(c, "rows", cfg.codebook.rows);
    } else {
        cfg.codebook.length = 128;
        cfg.codebook.num_users = 2;
        cfg.codebook.theta_deg = 50;
    }

    if (j.contains("channel")) {
        const json& c = j.at("channel");
        check_keys(c, {"kind", "k_factor", "snr_grid"}, "channel");
        std::string kind = "awgn";
        double k_factor = 0;
        read_field(c, "kind", kind);
        read_field(c, "k_factor", k_factor);
        cfg.channel = channel_kind_from_string(kind, k_factor);
        read_field(c, "snr_grid", cfg.snr_grid);
    }

    cfg.model.codeword_length = cfg.codebook.length;
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, {"hidden", "feature_dim", "tokens", "nsm_latent",
                       "nsm_depth"},
                   "model");
        read_field(m, "hidden", cfg.model.hidden);
        read_field(m, "feature_dim", cfg.model.feature_dim);
        read_field(m, "tokens", cfg.model.tokens);
        read_field(m, "nsm_latent", cfg.model.nsm_latent);
        read_field(m, "nsm_depth", cfg.model.nsm_depth);
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, {"learning_rate", "clip_norm", "epochs", "num_users",
                       "batch_size", "dataset_size", "snr_range_db", "seed",
                       "lambda_fair", "lambda_orth"},
                   "train");
        read_field(t, "learning_rate", cfg.learning_rate);
        read_field(t, "clip_norm", cfg.clip_norm);
        read_field(t, "epochs", cfg.epochs);
        read_field(t, "num_users", cfg.num_users);
        read_field(t, "batch_size", cfg.batch_size);
        read_field(t, "dataset_size", cfg.dataset_size);
        if (t.contains("snr_range_db")) {
            const auto range = t.at("snr_range_db").get<std::vector<double>>();
            if (range.size() != 2)
                throw ConfigError("train.snr_range_db must be [lo, hi]");
            cfg.snr_lo_db = range[0];
            cfg.snr_hi_db = range[1];
        }
        read_field(t, "seed", cfg.train_seed);
        read_field(t, "lambda_fair", cfg.weights.lambda_fair);
        read_field(t, "lambda_orth", cfg.weights.lambda_orth);
    }

    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        check_keys(m, {"subspace_rank", "projection_threshold", "psnr_max_value",
                       "eval_batches", "eval_batch_size", "eval_seed"},
                   "metrics");
        read_field(m, "subspace_rank", cfg.metrics.subspace_rank);
        read_field(m, "projection_threshold", cfg.metrics.projection_threshold);
        read_field(m, "psnr_max_value", cfg.metrics.psnr_max_value);
        read_field(m, "eval_batches", cfg.eval_batches);
        read_field(m, "eval_batch_size", cfg.eval_batch_size);
        read_field(m, "eval_seed", cfg.eval_seed);
    }

    if (cfg.num_users > cfg.codebook.num_users)
        throw ConfigError("train.num_users (" + std::to_string(cfg.num_users) +
                          ") exceeds codebook.users (" +
                          std::to_string(cfg.codebook.num_users) + ")");
    cfg.model.validate();
    return cfg;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<double> parse_snr_grid(const std::string& text) {
    auto parse_one = [](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad SNR value '" + s + "'");
        }
    };
    std::vector<double> grid;
    if (text.find(':') != std::string::npos) {
        std::istringstream ss(text);
        std::string lo_s, step_s, hi_s;
        if (!std::getline(ss, lo_s, ':') || !std::getline(ss, step_s, ':') ||
            !std::getline(ss, hi_s))
            throw ConfigError("SNR range must be lo:step:hi");
        const double lo = parse_one(lo_s);
        const double step = parse_one(step_s);
        const double hi = parse_one(hi_s);
        if (!(step > 0)) throw ConfigError("SNR range step must be positive");
        for (double v = lo; v <= hi + 1e-9; v += step) grid.push_back(v);
    } else {
        std::istringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) grid.push_back(parse_one(cell));
    }
    if (grid.empty()) throw ConfigError("empty SNR grid");
    return grid;
}

namespace {

json affine_to_json(const Affine& a) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < a.w.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < a.w.cols(); ++c) row.push_back(a.w(r, c));
        rows.push_back(std::move(row));
    }
    json b = json::array();
    for (Eigen::Index i = 0; i < a.b.size(); ++i) b.push_back(a.b(i));
    return json{{"w", std::move(rows)}, {"b", std::move(b)}};
}

void affine_from_json(const json& j, Affine& a, const std::string& name) {
    check_keys(j, {"w", "b"}, name);
    const json& rows = j.at("w");
    const json& b = j.at("b");
    if (static_cast<Eigen::Index>(rows.size()) != a.w.rows() ||
        static_cast<Eigen::Index>(b.size()) != a.b.size())
        throw ShapeMismatch("checkpoint: shape of " + name +
                            " does not match the declared dims");
    for (Eigen::Index r = 0; r < a.w.rows(); ++r) {
        const json& row = rows.at(r);
        if (static_cast<Eigen::Index>(row.size()) != a.w.cols())
            throw ShapeMismatch("checkpoint: row width of " + name);
        for (Eigen::Index c = 0; c < a.w.cols(); ++c)
            a.w(r, c) = row.at(c).get<double>();
    }
    for (Eigen::Index i = 0; i < a.b.size(); ++i) a.b(i) = b.at(i).get<double>();
}

json fa_to_json(const FaBlock& f) {
    return json{{"l1", affine_to_json(f.l1)},
                {"l2", affine_to_json(f.l2)},
                {"l3", affine_to_json(f.l3)}};
}

void fa_from_json(const json& j, FaBlock& f, const std::string& name) {
    check_keys(j, {"l1", "l2", "l3"}, name);
    affine_from_json(j.at("l1"), f.l1, name + ".l1");
    affine_from_json(j.at("l2"), f.l2, name + ".l2");
    affine_from_json(j.at("l3"), f.l3, name + ".l3");
}

json nsm_to_json(const NsmParameters& p) {
    json fa_ma = json::array(), fa_s = json::array(), fu = json::array();
    for (const auto& f : p.fa_ma) fa_ma.push_back(fa_to_json(f));
    for (const auto& f : p.fa_s) fa_s.push_back(fa_to_json(f));
    for (const auto& a : p.fu) fu.push_back(affine_to_json(a));
    return json{{"fu0", affine_to_json(p.fu0)},
                {"fa_ma", std::move(fa_ma)},
                {"fa_s", std::move(fa_s)},
                {"fu", std::move(fu)}};
}

void nsm_from_json(const json& j, NsmParameters& p, const std::string& name) {
    check_keys(j, {"fu0", "fa_ma", "fa_s", "fu"}, name);
    affine_from_json(j.at("fu0"), p.fu0, name + ".fu0");
    const json& fa_ma = j.at("fa_ma");
    const json& fa_s = j.at("fa_s");
    const json& fu = j.at("fu");
    if (fa_ma.size() != p.fa_ma.size() || fa_s.size() != p.fa_s.size() ||
        fu.size() != p.fu.size())
        throw ShapeMismatch("checkpoint: depth of " + name +
                            " does not match the declared dims");
    for (std::size_t i = 0; i < p.fa_ma.size(); ++i) {
        fa_from_json(fa_ma.at(i), p.fa_ma[i], name + ".fa_ma");
        fa_from_json(fa_s.at(i), p.fa_s[i], name + ".fa_s");
        affine_from_json(fu.at(i), p.fu[i], name + ".fu");
    }
}

json dims_to_json(const ModelDims& d) {
    return json{{"image_dim", d.image_dim},     {"hidden", d.hidden},
                {"feature_dim", d.feature_dim}, {"tokens", d.tokens},
                {"nsm_latent", d.nsm_latent},   {"nsm_depth", d.nsm_depth},
                {"codeword_length", d.codeword_length}};
}

ModelDims dims_from_json(const json& j) {
    check_keys(j, {"image_dim", "hidden", "feature_dim", "tokens", "nsm_latent",
                   "nsm_depth", "codeword_length"},
               "checkpoint dims");
    ModelDims d;
    read_field(j, "image_dim", d.image_dim);
    read_field(j, "hidden", d.hidden);
    read_field(j, "feature_dim", d.feature_dim);
    read_field(j, "tokens", d.tokens);
    read_field(j, "nsm_latent", d.nsm_latent);
    read_field(j, "nsm_depth", d.nsm_depth);
    read_field(j, "codeword_length", d.codeword_length);
    d.validate();
    return d;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    json book{{"length", ck.book.length},
              {"theta_deg", ck.book.theta_deg},
              {"words", ck.book.words}};
    json j{{"version", 1},
           {"_meta",
            {{"config_hash", ck.config_hash},
             {"seeds", {{"train", ck.train_seed}}}}},
           {"dims", dims_to_json(ck.params.dims)},
           {"codebook", std::move(book)},
           {"codec",
            {{"enc1", affine_to_json(ck.params.codec.enc1)},
             {"enc2", affine_to_json(ck.params.codec.enc2)},
             {"dec1", affine_to_json(ck.params.codec.dec1)},
             {"dec2", affine_to_json(ck.params.codec.dec2)}}},
           {"tx", nsm_to_json(ck.params.tx)},
           {"rx", nsm_to_json(ck.params.rx)}};
    write_text_file(path, j.dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    check_keys(j, {"version", "_meta", "dims", "codebook", "codec", "tx", "rx"},
               "checkpoint");
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw FormatError("checkpoint: unsupported version");

    Checkpoint ck;
    const ModelDims dims = dims_from_json(j.at("dims"));
    ck.params = init_model(dims, 0);

    const json& c = j.at("codec");
    check_keys(c, {"enc1", "enc2", "dec1", "dec2"}, "codec");
    affine_from_json(c.at("enc1"), ck.params.codec.enc1, "codec.enc1");
    affine_from_json(c.at("enc2"), ck.params.codec.enc2, "codec.enc2");
    affine_from_json(c.at("dec1"), ck.params.codec.dec1, "codec.dec1");
    affine_from_json(c.at("dec2"), ck.params.codec.dec2, "codec.dec2");
    nsm_from_json(j.at("tx"), ck.params.tx, "tx");
    nsm_from_json(j.at("rx"), ck.params.rx, "rx");

    const json& b = j.at("codebook");
    check_keys(b, {"length", "theta_deg", "words"}, "codebook");
    ck.book.length = b.at("length").get<int>();
    ck.book.theta_deg = b.at("theta_deg").get<double>();
    ck.book.words = b.at("words").get<std::vector<std::vector<int>>>();
    for (const auto& w : ck.book.words)
        if (static_cast<int>(w.size()) != ck.book.length)
            throw FormatError("checkpoint: codeword length mismatch");
    if (ck.book.length != dims.codeword_length)
        throw ShapeMismatch("checkpoint: codebook length " +
                            std::to_string(ck.book.length) +
                            " does not match dims codeword_length " +
                            std::to_string(dims.codeword_length));

    if (j.contains("_meta")) {
        const json& m = j.at("_meta");
        if (m.contains("config_hash"))
            ck.config_hash = m.at("config_hash").get<std::string>();
        if (m.contains("seeds") && m.at("seeds").contains("train"))
            ck.train_seed = m.at("seeds").at("train").get<std::uint64_t>();
    }
    return ck;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::string& config_hash, const std::string& seeds,
                     const std::string& header)
    : path_(path) {
    buffer_ = "# config_hash=" + config_hash + "\n# seeds=" + seeds + "\n" +
              header + "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += cells[i];
    }
    buffer_ += '\n';
}

void CsvWriter::close() {
    write_text_file(path_, buffer_);
    buffer_.clear();
}

void write_loss_trace_csv(const std::filesystem::path& path,
                          const std::vector<LossBreakdown>& trace,
                          const std::string& config_hash,
                          const std::string& seeds) {
    CsvWriter csv(path, config_hash, seeds, "epoch,recon,fair,orth,total");
    for (std::size_t e = 0; e < trace.size(); ++e)
        csv.row({std::to_string(e), format_double(trace[e].recon),
                 format_double(trace[e].fair), format_double(trace[e].orth),
                 format_double(trace[e].total)});
    csv.close();
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void write_train_report_json(const std::filesystem::path& path,
                             const TrainReport& report,
                             const std::string& config_hash,
                             const std::string& seeds) {
    json trace = json::array();
    for (const LossBreakdown& lb : report.trace)
        trace.push_back(json{{"recon", lb.recon},
                             {"fair", lb.fair},
                             {"orth", lb.orth},
                             {"total", lb.total}});
    const json j{{"_meta", {{"config_hash", config_hash}, {"seeds", seeds}}},
                 {"trace", std::move(trace)},
                 {"final_angles_deg", matrix_to_json(report.final_angles_deg)},
                 {"per_user_mse", report.per_user_mse}};
    write_text_file(path, j.dump(2) + "\n");
}

void write_metrics_csv(const std::filesystem::path& path,
                       const MetricsReport& report,
                       const std::string& config_hash, const std::string& seeds) {
    CsvWriter csv(path, config_hash, seeds,
                  "snr_db,user,mse,psnr,symbols_per_image");
    for (std::size_t s = 0; s < report.snr_grid.size(); ++s)
        for (std::size_t u = 0; u < report.mse_grid[s].size(); ++u)
            csv.row({format_double(report.snr_grid[s]), std::to_string(u + 1),
                     format_double(report.mse_grid[s][u]),
                     format_double(report.psnr_grid[s][u]),
                     std::to_string(report.symbols_per_image)});
    csv.close();
}

void write_metrics_report_json(const std::filesystem::path& path,
                               const MetricsReport& report,
                               const std::string& config_hash,
                               const std::string& seeds) {
    const json j{{"_meta", {{"config_hash", config_hash}, {"seeds", seeds}}},
                 {"snr_grid", report.snr_grid},
                 {"mse_grid", report.mse_grid},
                 {"psnr_grid", report.psnr_grid},
                 {"cosine", matrix_to_json(report.cosine)},
                 {"angles_deg", matrix_to_json(report.angles_deg)},
                 {"cross_projection", matrix_to_json(report.cross_projection)},
                 {"orth_value", report.orth_value},
                 {"symbols_per_image", report.symbols_per_image},
                 {"subspace_rank", report.subspace_rank}};
    write_text_file(path, j.dump(2) + "\n");
}

void write_matrix_csv(const std::filesystem::path& path,
                      const Eigen::MatrixXd& matrix,
                      const std::string& config_hash, const std::string& seeds) {
    std::string header = "row";
    for (Eigen::Index c = 0; c < matrix.cols(); ++c)
        header += ",c" + std::to_string(c + 1);
    CsvWriter csv(path, config_hash, seeds, header);
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        std::vector<std::string> cells{std::to_string(r + 1)};
        for (Eigen::Index c = 0; c < matrix.cols(); ++c)
            cells.push_back(format_double(matrix(r, c)));
        csv.row(cells);
    }
    csv.close();
}

}  // namespace nocsim
