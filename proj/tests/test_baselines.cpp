#include <cmath>
#include <vector>

#include <doctest.h>

#include "nocsim/baselines.hpp"
#include "nocsim/codebook.hpp"
#include "nocsim/errors.hpp"

using namespace nocsim;

TEST_CASE("random bits are fair and deterministic") {
    const auto a = random_bits(20000, 3);
    const auto b = random_bits(20000, 3);
    CHECK(a == b);
    const auto c = random_bits(20000, 4);
    CHECK(a != c);
    long ones = 0;
    for (int v : a) {
        REQUIRE((v == 0 || v == 1));
        ones += v;
    }
    // 4 sigma band around 10000 at sigma = sqrt(20000)/2 ~ 70.7.
    CHECK(std::abs(ones - 10000L) < 285);
}

TEST_CASE("bpsk error rate theory at the tabulated points") {
    CHECK(bpsk_awgn_ber_theory(0) ==
          doctest::Approx(0.07864960352514256).epsilon(1e-12));
    CHECK(bpsk_awgn_ber_theory(4) ==
          doctest::Approx(0.01250081804073756).epsilon(1e-12));
    CHECK(bpsk_awgn_ber_theory(10) ==
          doctest::Approx(3.872108215522042e-6).epsilon(1e-9));
}

TEST_CASE("noiseless cdma round trip is bit exact") {
    const WalshMatrix walsh = walsh_matrix(4);
    std::vector<std::vector<int>> streams = {random_bits(512, 1),
                                             random_bits(512, 2),
                                             random_bits(512, 3)};
    const CdmaResult res = cdma_roundtrip(streams, walsh, 400.0, 9);
    CHECK(res.spreading == 4);
    CHECK(res.bits_per_user == 512);
    for (int u = 0; u < 3; ++u) {
        CHECK(res.errors[u] == 0);
        CHECK(res.ber[u] == 0.0);
        CHECK(res.decoded[u] == streams[u]);
    }
}

TEST_CASE("noiseless despread statistic is the spreading gain") {
    const WalshMatrix walsh = walsh_matrix(8);
    std::vector<std::vector<int>> streams = {std::vector<int>{0, 1, 0, 1},
                                             std::vector<int>{1, 1, 0, 0}};
    const CdmaResult res = cdma_roundtrip(streams, walsh, 400.0, 1, true);
    REQUIRE(res.stats.size() == 2);
    for (int u = 0; u < 2; ++u)
        for (std::size_t t = 0; t < 4; ++t) {
            const double want = (streams[u][t] == 0 ? 8.0 : -8.0);
            CHECK(res.stats[u][t] == doctest::Approx(want).epsilon(1e-9));
        }
}

TEST_CASE("single-user cdma of order one is plain bpsk at theory rate") {
    const WalshMatrix walsh = walsh_matrix(1);
    const long n = 200000;
    const double snr = 4.0;
    const CdmaResult res =
        cdma_roundtrip({random_bits(n, 11)}, walsh, snr, 12);
    const double p = bpsk_awgn_ber_theory(snr);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(res.ber[0] - p) < 4 * se);
}

TEST_CASE("orthogonal spreading removes multi-user interference") {
    // Three synchronized users on Walsh-4: each matched filter sees only its
    // own signal plus noise, so every user tracks single-user theory.
    const WalshMatrix walsh = walsh_matrix(4);
    const long n = 100000;
    const double snr = 6.0;
    std::vector<std::vector<int>> streams = {random_bits(n, 21),
                                             random_bits(n, 22),
                                             random_bits(n, 23)};
    const CdmaResult res = cdma_roundtrip(streams, walsh, snr, 24);
    const double p = bpsk_awgn_ber_theory(snr);
    const double se = std::sqrt(p * (1 - p) / n);
    for (int u = 0; u < 3; ++u) CHECK(std::abs(res.ber[u] - p) < 4 * se);
}

TEST_CASE("cdma validates users and stream lengths") {
    const WalshMatrix walsh = walsh_matrix(2);
    std::vector<std::vector<int>> three(3, std::vector<int>(4, 0));
    CHECK_THROWS_AS(cdma_roundtrip(three, walsh, 10, 1), TooManyUsers);
    std::vector<std::vector<int>> ragged = {{0, 1}, {0}};
    CHECK_THROWS_AS(cdma_roundtrip(ragged, walsh, 10, 1), LengthMismatch);
    CHECK_THROWS_AS(cdma_roundtrip({}, walsh, 10, 1), LengthMismatch);
}

TEST_CASE("noma with the strong user decoded first is exact without noise") {
    // alpha = 0.6: direct slicing recovers user 1, cancellation user 2.
    const std::vector<int> bits1 = {0, 0, 1, 1};
    const std::vector<int> bits2 = {0, 1, 0, 1};
    NomaConfig cfg;
    cfg.alpha = 0.6;
    cfg.snr1_db = 400;
    cfg.snr2_db = 400;
    const NomaResult res = noma_sic_roundtrip(bits1, bits2, cfg);
    CHECK(res.errors1 == 0);
    CHECK(res.errors2 == 0);
    CHECK(res.decoded1 == bits1);
    CHECK(res.decoded2 == bits2);
}

TEST_CASE("noma with the weak user holding the sic slot fails in closed form") {
    // alpha = 0.4 makes user 1 the weak one; direct slicing then follows the
    // interferer whenever the bits differ, and the cancellation stage
    // inherits the wrong decision: both streams end at BER 1/2 on the
    // exhaustive bit grid.
    const std::vector<int> bits1 = {0, 0, 1, 1};
    const std::vector<int> bits2 = {0, 1, 0, 1};
    NomaConfig cfg;
    cfg.alpha = 0.4;
    cfg.snr1_db = 400;
    cfg.snr2_db = 400;
    const NomaResult res = noma_sic_roundtrip(bits1, bits2, cfg);
    CHECK(res.ber1 == doctest::Approx(0.5));
    CHECK(res.ber2 == doctest::Approx(0.5));
}

TEST_CASE("decode_weak_first swaps the failure onto a good power split") {
    const std::vector<int> bits1 = {0, 0, 1, 1};
    const std::vector<int> bits2 = {0, 1, 0, 1};
    NomaConfig cfg;
    cfg.alpha = 0.6;
    cfg.snr1_db = 400;
    cfg.snr2_db = 400;
    cfg.decode_weak_first = true;
    const NomaResult res = noma_sic_roundtrip(bits1, bits2, cfg);
    CHECK(res.ber1 == doctest::Approx(0.5));
    CHECK(res.ber2 == doctest::Approx(0.5));
}

TEST_CASE("noma at the reference operating point is nearly error free") {
    const long n = 50000;
    NomaConfig cfg;
    cfg.alpha = 0.8;
    cfg.snr1_db = 20;
    cfg.snr2_db = 20;
    cfg.seed = 5;
    const NomaResult res =
        noma_sic_roundtrip(random_bits(n, 1), random_bits(n, 2), cfg);
    CHECK(res.ber1 < 1e-3);
    CHECK(res.ber2 < 1e-3);
}

TEST_CASE("noma validates alpha and lengths") {
    const std::vector<int> bits = {0, 1};
    NomaConfig cfg;
    cfg.alpha = 1.0;
    CHECK_THROWS_AS(noma_sic_roundtrip(bits, bits, cfg), ConfigError);
    cfg.alpha = 0.5;
    CHECK_THROWS_AS(noma_sic_roundtrip(bits, {0}, cfg), LengthMismatch);
    CHECK_THROWS_AS(noma_sic_roundtrip({}, {}, cfg), LengthMismatch);
}
