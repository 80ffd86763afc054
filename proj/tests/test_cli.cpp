#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "nocsim/errors.hpp"
#include "nocsim/experiment.hpp"

using namespace nocsim;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const fs::path log = "cli_output.log";
    const std::string cmd =
        std::string(NOCSIM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = read_file(log);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

long count_data_rows(const std::string& csv) {
    std::istringstream ss(csv);
    std::string line;
    long rows = -1;  // uncount the header
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++rows;
    }
    return rows;
}

// Small but complete experiment description used by the round-trip tests.
nlohmann::json tiny_config_json() {
    return nlohmann::json{
        {"version", 1},
        {"output_dir", "cli_out"},
        {"codebook",
         {{"length", 8}, {"users", 2}, {"theta_deg", 60}, {"seed", 1}}},
        {"channel", {{"kind", "awgn"}, {"snr_grid", {0.0, 10.0}}}},
        {"model",
         {{"hidden", 5},
          {"feature_dim", 8},
          {"tokens", 2},
          {"nsm_latent", 6},
          {"nsm_depth", 2}}},
        {"train",
         {{"learning_rate", 0.005},
          {"epochs", 2},
          {"num_users", 2},
          {"batch_size", 8},
          {"dataset_size", 16},
          {"snr_range_db", {0.0, 15.0}},
          {"seed", 3}}},
        {"metrics",
         {{"subspace_rank", 3}, {"eval_batches", 1}, {"eval_batch_size", 4}}}};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

}  // namespace

TEST_CASE("snr grid parsing") {
    CHECK(parse_snr_grid("0:2:10") ==
          std::vector<double>{0, 2, 4, 6, 8, 10});
    CHECK(parse_snr_grid("0:5:14") == std::vector<double>{0, 5, 10});
    CHECK(parse_snr_grid("1,3.5,9") == std::vector<double>{1, 3.5, 9});
    CHECK(parse_snr_grid("-4") == std::vector<double>{-4});
    CHECK_THROWS_AS(parse_snr_grid("0:0:10"), ConfigError);
    CHECK_THROWS_AS(parse_snr_grid("0:2"), ConfigError);
    CHECK_THROWS_AS(parse_snr_grid("abc"), ConfigError);
    CHECK_THROWS_AS(parse_snr_grid(""), ConfigError);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
}

TEST_CASE("format_double is shortest round-trip") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(0.30000000000000004) == "0.30000000000000004");
    const double v = 1.0 / 3.0;
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("config loading fills every section and hashes the file") {
    const fs::path path = "cli_cfg_ok.json";
    write_json(path, tiny_config_json());
    const ExperimentConfig cfg = load_config(path);
    CHECK(cfg.codebook.length == 8);
    CHECK(cfg.codebook.num_users == 2);
    CHECK(cfg.codebook.theta_deg == 60);
    CHECK(cfg.channel.fading == Fading::Awgn);
    CHECK(cfg.snr_grid == std::vector<double>{0, 10});
    CHECK(cfg.model.hidden == 5);
    CHECK(cfg.model.feature_dim == 8);
    CHECK(cfg.model.codeword_length == 8);  // tied to the codebook section
    CHECK(cfg.epochs == 2);
    CHECK(cfg.train_seed == 3);
    CHECK(cfg.snr_lo_db == 0);
    CHECK(cfg.snr_hi_db == 15);
    CHECK(cfg.metrics.subspace_rank == 3);
    CHECK(cfg.eval_batches == 1);
    CHECK(cfg.output_dir == "cli_out");
    CHECK(cfg.config_hash.size() == 16);
    CHECK(cfg.seeds_line() == "codebook:1,train:3,eval:1");

    // Identical content hashes identically; any edit changes it.
    const ExperimentConfig cfg2 = load_config(path);
    CHECK(cfg.config_hash == cfg2.config_hash);
    auto edited = tiny_config_json();
    edited["train"]["epochs"] = 3;
    write_json(path, edited);
    CHECK(load_config(path).config_hash != cfg.config_hash);
    fs::remove(path);
}

TEST_CASE("config loading is fail closed") {
    const fs::path path = "cli_cfg_bad.json";

    auto j = tiny_config_json();
    j["trian"] = nlohmann::json::object();  // typo at the root
    write_json(path, j);
    CHECK_THROWS_AS(load_config(path), ConfigError);

    j = tiny_config_json();
    j["train"]["learn_rate"] = 0.1;  // typo inside a section
    write_json(path, j);
    CHECK_THROWS_AS(load_config(path), ConfigError);

    j = tiny_config_json();
    j.erase("version");
    write_json(path, j);
    CHECK_THROWS_AS(load_config(path), ConfigError);

    j = tiny_config_json();
    j["version"] = 2;
    write_json(path, j);
    CHECK_THROWS_AS(load_config(path), ConfigError);

    j = tiny_config_json();
    j["train"]["snr_range_db"] = {0.0, 5.0, 10.0};
    write_json(path, j);
    CHECK_THROWS_AS(load_config(path), ConfigError);

    j = tiny_config_json();
    j["train"]["num_users"] = 3;  // codebook only has 2
    write_json(path, j);
    CHECK_THROWS_AS(load_config(path), ConfigError);

    {
        std::ofstream out(path);
        out << "not json";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);
    fs::remove(path);
    CHECK_THROWS_AS(load_config(path), IoError);
}

TEST_CASE("checkpoint save and load round-trips every parameter") {
    ModelDims dims;
    dims.image_dim = 6;
    dims.hidden = 5;
    dims.feature_dim = 8;
    dims.tokens = 2;
    dims.nsm_latent = 6;
    dims.nsm_depth = 2;
    dims.codeword_length = 8;

    NocGenConfig gen;
    gen.length = 8;
    gen.num_users = 2;
    gen.theta_deg = 60;

    Checkpoint ck;
    ck.params = init_model(dims, 42);
    ck.book = generate_noc(gen);
    ck.config_hash = "0123456789abcdef";
    ck.train_seed = 42;

    const fs::path path = "cli_checkpoint.json";
    save_checkpoint(ck, path);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.params.dims == dims);
    CHECK(loaded.params.to_vector() == ck.params.to_vector());
    CHECK(loaded.book.words == ck.book.words);
    CHECK(loaded.book.theta_deg == ck.book.theta_deg);
    CHECK(loaded.config_hash == ck.config_hash);
    CHECK(loaded.train_seed == 42);

    // Declared dims must match the stored tensors.
    auto j = nlohmann::json::parse(read_file(path));
    j["dims"]["hidden"] = 9;
    write_json(path, j);
    CHECK_THROWS_AS(load_checkpoint(path), ShapeMismatch);

    j["dims"]["hidden"] = 5;
    j["dims"]["codeword_length"] = 16;
    write_json(path, j);
    CHECK_THROWS_AS(load_checkpoint(path), ShapeMismatch);
    fs::remove(path);
}

TEST_CASE("csv writer stamps provenance comments") {
    const fs::path path = "cli_test.csv";
    CsvWriter csv(path, "deadbeef", "train:1", "a,b");
    csv.row({"1", "2"});
    csv.row({"3", "4"});
    csv.close();
    CHECK(read_file(path) ==
          "# config_hash=deadbeef\n# seeds=train:1\na,b\n1,2\n3,4\n");
    fs::remove(path);
}

TEST_CASE("cli: no subcommand or bad flags exit 2, help exits 0") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("codebook --no-such-flag") == 2);
    CHECK(run_cli("train") == 2);                      // missing --config
    CHECK(run_cli("train --config missing.json") == 2);
}

TEST_CASE("cli codebook: generates, reports angles, maps failures") {
    std::string out;
    CHECK(run_cli("codebook --length 128 --users 3 --angle 50 --out cli_cb.txt",
                  &out) == 0);
    const Codebook book = load_codebook("cli_cb.txt");
    CHECK(book.users() == 3);
    CHECK(book.length == 128);
    CHECK(out.find("pair (1,2)") != std::string::npos);
    CHECK(out.find("angle") != std::string::npos);
    // Meta comments appended after the rows.
    const std::string text = read_file("cli_cb.txt");
    CHECK(text.find("# config_hash=") != std::string::npos);
    CHECK(text.find("# seeds=codebook:1") != std::string::npos);

    // Exact orthogonal case reports 90.000.
    CHECK(run_cli("codebook --length 64 --users 2 --angle 90 --out cli_cb.txt",
                  &out) == 0);
    CHECK(out.find("angle 90.000") != std::string::npos);

    CHECK(run_cli("codebook --length 100 --out cli_cb.txt") == 2);
    CHECK(run_cli("codebook --length 8 --users 3 --angle 50 --tolerance 0 "
                  "--out cli_cb.txt") == 3);
    fs::remove("cli_cb.txt");
}

TEST_CASE("cli baseline: csv layout and scheme validation") {
    std::string out;
    CHECK(run_cli("baseline cdma --users 3 --snr 0:2:10 --bits 2000 "
                  "--out cli_cdma.csv",
                  &out) == 0);
    const std::string csv = read_file("cli_cdma.csv");
    CHECK(count_data_rows(csv) == 18);  // 6 SNR points x 3 users
    CHECK(csv.find("scheme,users,snr_db,bits,errors,ber,symbols_per_bit") !=
          std::string::npos);
    CHECK(csv.find("# config_hash=") != std::string::npos);
    // Spreading for 3 users is the next power of two.
    CHECK(csv.find("cdma,1,0,2000,") != std::string::npos);
    std::istringstream ss(csv);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty() && line[0] != '#' && line.rfind("cdma", 0) == 0)
            CHECK(line.substr(line.size() - 2) == ",4");

    // Byte-identical rerun.
    CHECK(run_cli("baseline cdma --users 3 --snr 0:2:10 --bits 2000 "
                  "--out cli_cdma2.csv") == 0);
    CHECK(read_file("cli_cdma2.csv") == csv);

    CHECK(run_cli("baseline bpsk --snr 0,4 --bits 1000 --out cli_bpsk.csv") ==
          0);
    const std::string bpsk_csv = read_file("cli_bpsk.csv");
    CHECK(count_data_rows(bpsk_csv) == 2);
    CHECK(bpsk_csv.find("bpsk,1,0,1000,") != std::string::npos);

    CHECK(run_cli("baseline noma --snr 20 --bits 1000 --alpha 0.8 "
                  "--out cli_noma.csv") == 0);
    CHECK(count_data_rows(read_file("cli_noma.csv")) == 2);

    CHECK(run_cli("baseline bogus --out cli_x.csv") == 2);
    CHECK(run_cli("baseline noma --users 3 --out cli_x.csv") == 2);
    CHECK(run_cli("baseline cdma --snr 0:0:10 --out cli_x.csv") == 2);
    for (const char* f : {"cli_cdma.csv", "cli_cdma2.csv", "cli_bpsk.csv",
                          "cli_noma.csv"})
        fs::remove(f);
}

TEST_CASE("cli train, eval and mismatch round trip") {
    fs::remove_all("cli_out");
    const fs::path cfg_path = "cli_roundtrip.json";
    write_json(cfg_path, tiny_config_json());

    std::string out;
    CHECK(run_cli("train --config " + cfg_path.string(), &out) == 0);
    CHECK(fs::exists("cli_out/checkpoint.json"));
    CHECK(fs::exists("cli_out/train_report.json"));
    CHECK(fs::exists("cli_out/loss_trace.csv"));
    CHECK(out.find("train complete") != std::string::npos);
    const std::string trace = read_file("cli_out/loss_trace.csv");
    CHECK(count_data_rows(trace) == 2);

    // Deterministic rerun: byte-identical artifacts.
    const std::string checkpoint = read_file("cli_out/checkpoint.json");
    CHECK(run_cli("train --config " + cfg_path.string()) == 0);
    CHECK(read_file("cli_out/loss_trace.csv") == trace);
    CHECK(read_file("cli_out/checkpoint.json") == checkpoint);

    CHECK(run_cli("eval --config " + cfg_path.string(), &out) == 0);
    CHECK(fs::exists("cli_out/metrics.csv"));
    CHECK(fs::exists("cli_out/metrics_report.json"));
    CHECK(fs::exists("cli_out/cosine.csv"));
    CHECK(fs::exists("cli_out/angles.csv"));
    CHECK(fs::exists("cli_out/cross_projection.csv"));
    const std::string metrics = read_file("cli_out/metrics.csv");
    CHECK(count_data_rows(metrics) == 4);  // 2 SNR points x 2 users
    CHECK(metrics.find("snr_db,user,mse,psnr,symbols_per_image") !=
          std::string::npos);
    CHECK(run_cli("eval --config " + cfg_path.string()) == 0);
    CHECK(read_file("cli_out/metrics.csv") == metrics);

    CHECK(run_cli("mismatch --config " + cfg_path.string() + " --snr 10",
                  &out) == 0);
    CHECK(fs::exists("cli_out/mismatch.csv"));
    CHECK(fs::exists("cli_out/mismatch_grid.csv"));
    CHECK(count_data_rows(read_file("cli_out/mismatch.csv")) == 4);  // 2x2
    CHECK(out.find("gap") != std::string::npos);

    // A config that trained a different shape cannot read this checkpoint.
    auto other = tiny_config_json();
    other["model"]["hidden"] = 6;
    const fs::path other_path = "cli_other.json";
    write_json(other_path, other);
    CHECK(run_cli("eval --config " + other_path.string() +
                  " --checkpoint cli_out/checkpoint.json") == 5);
    CHECK(run_cli("mismatch --config " + other_path.string() +
                  " --checkpoint cli_out/checkpoint.json") == 5);

    // Config constraint violations exit 2 and name the problem.
    auto bad = tiny_config_json();
    bad["train"]["num_users"] = 3;
    write_json(other_path, bad);
    CHECK(run_cli("train --config " + other_path.string(), &out) == 2);
    CHECK(out.find("num_users") != std::string::npos);

    // A runaway learning rate with the step cap disabled exits 4. The loss
    // must actually reach inf, which takes a few doubling epochs.
    auto runaway = tiny_config_json();
    runaway["train"]["learning_rate"] = 1e12;
    runaway["train"]["clip_norm"] = 0.0;
    runaway["train"]["epochs"] = 10;
    write_json(other_path, runaway);
    CHECK(run_cli("train --config " + other_path.string(), &out) == 4);
    CHECK(out.find("error:") != std::string::npos);

    fs::remove(cfg_path);
    fs::remove(other_path);
    fs::remove_all("cli_out");
}
