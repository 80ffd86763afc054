#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace nocsim {

// Rows of the standard doubling construction: mutually orthogonal
// +-1 sequences, row 0 all ones.
struct WalshMatrix {
    int order = 0;
    std::vector<std::vector<int>> rows;
};

WalshMatrix walsh_matrix(int order);

struct Codebook {
    int length = 0;         // L
    double theta_deg = 90;  // requested pairwise angle
    std::vector<std::vector<int>> words;  // K rows of L entries in {-1,+1}

    int users() const { return static_cast<int>(words.size()); }
    long dot(int i, int j) const;
};

struct NocGenConfig {
    int length = 0;      // L, power of two
    int num_users = 0;   // K
    double theta_deg = 90;
    int iters = 100;     // full pair sweeps
    int tolerance = 2;   // in dot-product units; one flip moves a dot by 2
    std::uint64_t seed = 0;
    bool random_rows = false;   // draw the K source rows at random (seeded)
    std::vector<int> rows;      // explicit source rows; overrides the default 1..K
};

// Nearest integer to x with the same parity as length (ties resolve down).
// +-1 words of even length can only realize even inner products.
long round_to_parity(double x, int length);

// Perturbs K orthogonal rows into a fixed-angle codebook by greedy sign
// flips. A flip of word i is accepted only if it strictly decreases the
// global objective sum_{u<v} (d_uv - d_target)^2, so the objective trace is
// monotone. When a sweep stalls short of the target, a joint flip of two
// positions in one word is tried under the same strict-decrease rule. The
// observer, when set, sees the objective after every accepted move. Throws
// TargetUnreachable when some pair is still outside the tolerance after all
// sweeps.
Codebook generate_noc(const NocGenConfig& cfg,
                      const std::function<void(long)>& objective_observer = {});

// Degrees, arccos(dot/L); diagonal is 0.
std::vector<std::vector<double>> pairwise_angles(const Codebook& book);

// Plain text: line 1 "L K theta_deg", then K lines of L signed ints.
void save_codebook(const Codebook& book, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace nocsim
