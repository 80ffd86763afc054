#include "nocsim/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

WalshMatrix walsh_matrix(int order) {
    if (order < 1 || (order & (order - 1)) != 0)
        throw NonPowerOfTwo("walsh_matrix: order " + std::to_string(order) +
                            " is not a power of two");
    WalshMatrix w;
    w.order = order;
    w.rows.assign(1, std::vector<int>{1});
    while (static_cast<int>(w.rows[0].size()) < order) {
        const int n = static_cast<int>(w.rows.size());
        std::vector<std::vector<int>> next(2 * n, std::vector<int>(2 * n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const int v = w.rows[i][j];
                next[i][j] = v;
                next[i][j + n] = v;
                next[i + n][j] = v;
                next[i + n][j + n] = -v;
            }
        w.rows = std::move(next);
    }
    return w;
}

long Codebook::dot(int i, int j) const {
    return std::inner_product(words[i].begin(), words[i].end(),
                              words[j].begin(), 0L);
}

long round_to_parity(double x, int length) {
    const long parity = static_cast<long>(length) & 1;
    long lo = static_cast<long>(std::floor(x));
    if (((lo ^ parity) & 1) != 0) --lo;
    const long hi = lo + 2;
    return (x - static_cast<double>(lo) <= static_cast<double>(hi) - x) ? lo : hi;
}

namespace {

long objective(const Codebook& book, long target) {
    long s = 0;
    for (int i = 0; i < book.users(); ++i)
        for (int j = i + 1; j < book.users(); ++j) {
            const long e = book.dot(i, j) - target;
            s += e * e;
        }
    return s;
}

std::vector<int> pick_rows(const NocGenConfig& cfg) {
    if (!cfg.rows.empty()) {
        if (static_cast<int>(cfg.rows.size()) != cfg.num_users)
            throw ConfigError("generate_noc: rows list must have num_users entries");
        for (int r : cfg.rows)
            if (r < 0 || r >= cfg.length)
                throw ConfigError("generate_noc: row index out of range");
        return cfg.rows;
    }
    std::vector<int> rows(cfg.num_users);
    if (cfg.random_rows) {
        // Sample K distinct rows from 1..L-1; row 0 (all ones) stays out so
        // the starting words are zero-mean.
        std::vector<int> pool(cfg.length - 1);
        std::iota(pool.begin(), pool.end(), 1);
        Rng rng(cfg.seed);
        for (int i = 0; i < cfg.num_users; ++i) {
            const int pick = i + static_cast<int>(rng.integer(pool.size() - i));
            std::swap(pool[i], pool[pick]);
            rows[i] = pool[i];
        }
        std::sort(rows.begin(), rows.end());
    } else {
        std::iota(rows.begin(), rows.end(), 1);
    }
    return rows;
}

}  // namespace

Codebook generate_noc(const NocGenConfig& cfg,
                      const std::function<void(long)>& objective_observer) {
    if (cfg.num_users < 1)
        throw ConfigError("generate_noc: num_users must be positive");
    // Default row selection skips the all-ones row, so only L-1 starting
    // words exist; an explicit rows list may use all L.
    const int row_budget = cfg.rows.empty() ? cfg.length - 1 : cfg.length;
    if (cfg.num_users > row_budget)
        throw TooManyUsers("generate_noc: " + std::to_string(cfg.num_users) +
                           " users exceed the " + std::to_string(row_budget) +
                           " available rows at length " +
                           std::to_string(cfg.length));
    if (cfg.iters < 0) throw ConfigError("generate_noc: iters must be >= 0");
    if (cfg.tolerance < 0) throw ConfigError("generate_noc: tolerance must be >= 0");

    const WalshMatrix w = walsh_matrix(cfg.length);
    const std::vector<int> rows = pick_rows(cfg);

    Codebook book;
    book.length = cfg.length;
    book.theta_deg = cfg.theta_deg;
    book.words.reserve(cfg.num_users);
    for (int r : rows) book.words.push_back(w.rows[r]);

    const long target = round_to_parity(
        std::cos(cfg.theta_deg * kPi / 180.0) * cfg.length, cfg.length);

    const int k = cfg.num_users;
    // Cached Gram matrix; a flip of words[i][pos] updates row/column i only.
    std::vector<std::vector<long>> gram(k, std::vector<long>(k));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) gram[i][j] = book.dot(i, j);

    long current = objective(book, target);
    if (objective_observer) objective_observer(current);

    const auto apply_flip = [&](int i, int p, int q, long delta) {
        book.words[i][p] = -book.words[i][p];
        if (q >= 0) book.words[i][q] = -book.words[i][q];
        for (int other = 0; other < k; ++other) {
            if (other == i) continue;
            const long d = book.dot(i, other);
            gram[i][other] = d;
            gram[other][i] = d;
        }
        current += delta;
        if (objective_observer) objective_observer(current);
    };

    // Single flips move every dot of a word by +-2, so two pairs exactly one
    // step short can strand the climb in a strict local minimum. A joint
    // flip of two positions in one word moves each dot by -4, 0 or +4 and
    // can repair such a pair without touching the exact ones; the move is
    // accepted under the same strict-decrease rule (steepest first).
    const auto try_pair_flip = [&]() -> bool {
        long best = 0;
        int bi = -1, bp = -1, bq = -1;
        for (int i = 0; i < k; ++i)
            for (int p = 0; p < cfg.length; ++p)
                for (int q = p + 1; q < cfg.length; ++q) {
                    long delta = 0;
                    for (int other = 0; other < k; ++other) {
                        if (other == i) continue;
                        const long d_old = gram[i][other] - target;
                        const long d_new =
                            d_old - 2L * book.words[i][p] * book.words[other][p] -
                            2L * book.words[i][q] * book.words[other][q];
                        delta += d_new * d_new - d_old * d_old;
                    }
                    if (delta < best) {
                        best = delta;
                        bi = i;
                        bp = p;
                        bq = q;
                    }
                }
        if (bi < 0) return false;
        apply_flip(bi, bp, bq, best);
        return true;
    };

    for (int sweep = 0; sweep < cfg.iters; ++sweep) {
        bool changed = false;
        for (int i = 0; i < k; ++i) {
            for (int j = i + 1; j < k; ++j) {
                if (gram[i][j] == target) continue;
                for (int pos = 0; pos < cfg.length; ++pos) {
                    // Flipping words[i][pos] changes gram[i][j'] by
                    // -2 * words[i][pos] * words[j'][pos] for every j' != i.
                    long delta = 0;
                    for (int other = 0; other < k; ++other) {
                        if (other == i) continue;
                        const long d_old = gram[i][other] - target;
                        const long d_new = d_old -
                            2L * book.words[i][pos] * book.words[other][pos];
                        delta += d_new * d_new - d_old * d_old;
                    }
                    if (delta >= 0) continue;
                    apply_flip(i, pos, -1, delta);
                    changed = true;
                    if (gram[i][j] == target) break;
                }
            }
        }
        if (!changed && current > 0) changed = try_pair_flip();
        if (!changed) break;
    }

    long worst = 0;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            worst = std::max(worst, std::labs(gram[i][j] - target));
    if (worst > cfg.tolerance)
        throw TargetUnreachable(
            "generate_noc: worst pair misses target " + std::to_string(target) +
            " by " + std::to_string(worst) + " (tolerance " +
            std::to_string(cfg.tolerance) + ")");
    return book;
}

std::vector<std::vector<double>> pairwise_angles(const Codebook& book) {
    const int k = book.users();
    std::vector<std::vector<double>> deg(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            double c = static_cast<double>(book.dot(i, j)) / book.length;
            c = std::clamp(c, -1.0, 1.0);
            deg[i][j] = std::acos(c) * 180.0 / kPi;
        }
    return deg;
}

void save_codebook(const Codebook& book, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_codebook: cannot open " + path.string());
    out << book.length << ' ' << book.users() << ' ' << book.theta_deg << '\n';
    for (const auto& word : book.words) {
        for (std::size_t i = 0; i < word.size(); ++i) {
            if (i) out << ' ';
            out << word[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("save_codebook: write failed for " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_codebook: cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header))
        throw FormatError("load_codebook: missing header line");
    std::istringstream hs(header);
    int length = 0, users = 0;
    double theta = 0;
    if (!(hs >> length >> users >> theta))
        throw FormatError("load_codebook: bad header '" + header + "'");
    if (length < 1 || users < 1)
        throw FormatError("load_codebook: non-positive dimensions in header");

    Codebook book;
    book.length = length;
    book.theta_deg = theta;
    book.words.assign(users, std::vector<int>(length));
    for (int r = 0; r < users; ++r)
        for (int c = 0; c < length; ++c) {
            int v;
            if (!(in >> v))
                throw FormatError("load_codebook: truncated at word " +
                                  std::to_string(r));
            if (v != 1 && v != -1)
                throw FormatError("load_codebook: entry " + std::to_string(v) +
                                  " is not +-1");
            book.words[r][c] = v;
        }
    return book;
}

}  // namespace nocsim
