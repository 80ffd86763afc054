#pragma once

#include <cstdint>
#include <vector>

#include "nocsim/codebook.hpp"

namespace nocsim {

std::vector<int> random_bits(long count, std::uint64_t seed);

// Synchronous BPSK CDMA over AWGN: bit 0 -> +1, 1 -> -1, each symbol spread
// by the user's Walsh row, users summed chip-wise, matched-filter despread.
// snr_db is Eb/N0 per user.
struct CdmaResult {
    std::vector<std::vector<int>> decoded;
    std::vector<long> errors;
    std::vector<double> ber;
    long bits_per_user = 0;
    int spreading = 0;  // chips per bit, the bandwidth expansion factor
    // Despread decision statistics, kept only when requested (per user, per bit).
    std::vector<std::vector<double>> stats;
};

CdmaResult cdma_roundtrip(const std::vector<std::vector<int>>& bitstreams,
                          const WalshMatrix& walsh, double snr_db,
                          std::uint64_t seed, bool keep_stats = false);

// Two-user power-domain superposition: x = sqrt(alpha) s1 + sqrt(1-alpha) s2.
// User 1 holds power share alpha and is decoded directly; user 2 cancels the
// hard-decision remodulation of user 1 first. decode_weak_first swaps the
// order (used to demonstrate why power order matters).
struct NomaConfig {
    double alpha = 0.8;
    double snr1_db = 20;
    double snr2_db = 20;
    std::uint64_t seed = 0;
    bool decode_weak_first = false;
};

struct NomaResult {
    std::vector<int> decoded1, decoded2;
    long errors1 = 0, errors2 = 0;
    double ber1 = 0, ber2 = 0;
};

NomaResult noma_sic_roundtrip(const std::vector<int>& bits1,
                              const std::vector<int>& bits2,
                              const NomaConfig& cfg);

// Q(sqrt(2 * 10^(snr_db/10))), the coherent BPSK error rate over AWGN.
double bpsk_awgn_ber_theory(double snr_db);

}  // namespace nocsim
