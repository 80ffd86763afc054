#include "nocsim/baselines.hpp"

#include <cmath>
#include <string>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

std::vector<int> random_bits(long count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> bits(count);
    for (long i = 0; i < count; ++i) bits[i] = static_cast<int>(rng.integer(2));
    return bits;
}

namespace {

double bpsk(int bit) { return bit == 0 ? 1.0 : -1.0; }
int unbpsk(double s) { return s >= 0 ? 0 : 1; }

}  // namespace

CdmaResult cdma_roundtrip(const std::vector<std::vector<int>>& bitstreams,
                          const WalshMatrix& walsh, double snr_db,
                          std::uint64_t seed, bool keep_stats) {
    const int k = static_cast<int>(bitstreams.size());
    const int n = walsh.order;
    if (k < 1) throw LengthMismatch("cdma_roundtrip: no bitstreams");
    if (k > n)
        throw TooManyUsers("cdma_roundtrip: " + std::to_string(k) +
                           " users exceed spreading order " + std::to_string(n));
    const std::size_t bits = bitstreams[0].size();
    if (bits == 0) throw LengthMismatch("cdma_roundtrip: empty bitstreams");
    for (const auto& s : bitstreams)
        if (s.size() != bits)
            throw LengthMismatch("cdma_roundtrip: bitstream lengths differ");

    // Eb = n chip energies per bit; N0/2 per real chip gives
    // sigma_c^2 = n / (2 * 10^(snr/10)).
    const double sigma_c = std::sqrt(n / (2.0 * std::pow(10.0, snr_db / 10.0)));

    Rng rng(seed);
    CdmaResult res;
    res.bits_per_user = static_cast<long>(bits);
    res.spreading = n;
    res.decoded.assign(k, std::vector<int>(bits));
    res.errors.assign(k, 0);
    res.ber.assign(k, 0);
    if (keep_stats) res.stats.assign(k, std::vector<double>(bits));

    std::vector<double> chips(n);
    for (std::size_t t = 0; t < bits; ++t) {
        for (int c = 0; c < n; ++c) {
            double sum = 0;
            for (int u = 0; u < k; ++u)
                sum += bpsk(bitstreams[u][t]) * walsh.rows[u][c];
            chips[c] = sum + (sigma_c > 0 ? sigma_c * rng.gaussian() : 0.0);
        }
        for (int u = 0; u < k; ++u) {
            double stat = 0;
            for (int c = 0; c < n; ++c) stat += chips[c] * walsh.rows[u][c];
            if (keep_stats) res.stats[u][t] = stat;
            res.decoded[u][t] = unbpsk(stat);
            if (res.decoded[u][t] != bitstreams[u][t]) ++res.errors[u];
        }
    }
    for (int u = 0; u < k; ++u)
        res.ber[u] = static_cast<double>(res.errors[u]) / static_cast<double>(bits);
    return res;
}

NomaResult noma_sic_roundtrip(const std::vector<int>& bits1,
                              const std::vector<int>& bits2,
                              const NomaConfig& cfg) {
    if (bits1.size() != bits2.size() || bits1.empty())
        throw LengthMismatch("noma_sic_roundtrip: bitstream lengths differ");
    if (!(cfg.alpha > 0 && cfg.alpha < 1))
        throw ConfigError("noma_sic_roundtrip: alpha must be in (0,1)");

    const double a1 = std::sqrt(cfg.alpha);
    const double a2 = std::sqrt(1.0 - cfg.alpha);
    const double sigma1 = std::sqrt(std::pow(10.0, -cfg.snr1_db / 10.0));
    const double sigma2 = std::sqrt(std::pow(10.0, -cfg.snr2_db / 10.0));

    Rng rng(cfg.seed);
    NomaResult res;
    const std::size_t bits = bits1.size();
    res.decoded1.resize(bits);
    res.decoded2.resize(bits);
    for (std::size_t t = 0; t < bits; ++t) {
        const double s1 = bpsk(bits1[t]);
        const double s2 = bpsk(bits2[t]);
        const double x = a1 * s1 + a2 * s2;
        const double y1 = x + (sigma1 > 0 ? sigma1 * rng.gaussian() : 0.0);
        const double y2 = x + (sigma2 > 0 ? sigma2 * rng.gaussian() : 0.0);

        // Receiver 1 decodes its own stream directly.
        res.decoded1[t] = cfg.decode_weak_first
                              ? unbpsk(y1 - a2 * bpsk(unbpsk(y1)))
                              : unbpsk(y1);
        // Receiver 2 cancels the first-decoded signal before slicing.
        if (cfg.decode_weak_first) {
            res.decoded2[t] = unbpsk(y2);
        } else {
            const double s1_hat = bpsk(unbpsk(y2));
            res.decoded2[t] = unbpsk(y2 - a1 * s1_hat);
        }
        if (res.decoded1[t] != bits1[t]) ++res.errors1;
        if (res.decoded2[t] != bits2[t]) ++res.errors2;
    }
    res.ber1 = static_cast<double>(res.errors1) / static_cast<double>(bits);
    res.ber2 = static_cast<double>(res.errors2) / static_cast<double>(bits);
    return res;
}

double bpsk_awgn_ber_theory(double snr_db) {
    const double gamma = std::pow(10.0, snr_db / 10.0);
    return 0.5 * std::erfc(std::sqrt(gamma));
}

}  // namespace nocsim
