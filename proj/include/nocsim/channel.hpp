#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nocsim {

class Rng;

enum class Fading { Awgn, Rayleigh, Rician };

struct ChannelKind {
    Fading fading = Fading::Awgn;
    double k_factor = 0;  // Rician LOS-to-scatter power ratio

    static ChannelKind awgn() { return {Fading::Awgn, 0}; }
    static ChannelKind rayleigh() { return {Fading::Rayleigh, 0}; }
    static ChannelKind rician(double k) { return {Fading::Rician, k}; }
};

// Names: "awgn", "rayleigh", "rician". Throws ConfigError otherwise.
ChannelKind channel_kind_from_string(const std::string& name, double k_factor);
std::string to_string(const ChannelKind& kind);

// gains(j, i) is the complex gain from TX j to RX i. Fading draws are
// normalized to E[|h|^2] = 1; AWGN gains are exactly 1.
struct ChannelRealization {
    ChannelKind kind;
    Eigen::MatrixXcd gains;

    int num_users() const { return static_cast<int>(gains.rows()); }
};

struct NoiseSpec {
    double snr_db = 0;
    double power = 1;   // transmit power P per complex symbol
    double sigma2 = 1;  // noise variance per complex symbol
};

double snr_to_sigma2(double snr_db, double power);
NoiseSpec make_noise(double snr_db, double power = 1.0);

ChannelRealization draw_channel(const ChannelKind& kind, int num_users, Rng& rng);
ChannelRealization draw_channel(const ChannelKind& kind, int num_users,
                                std::uint64_t seed);

// y_i = sum_j sqrt(P) h_ji z_j + n_i, n_i ~ CN(0, sigma2 I).
std::vector<Eigen::VectorXcd> transmit(const std::vector<Eigen::VectorXcd>& features,
                                       const ChannelRealization& ch,
                                       const NoiseSpec& noise, Rng& rng);
std::vector<Eigen::VectorXcd> transmit(const std::vector<Eigen::VectorXcd>& features,
                                       const ChannelRealization& ch,
                                       const NoiseSpec& noise, std::uint64_t seed);

// I/Q pairing: [x0, x1, x2, x3] -> [x0 + i x1, x2 + i x3]. Norm-preserving.
Eigen::VectorXcd pack_complex(const Eigen::VectorXd& x);
Eigen::VectorXd unpack_complex(const Eigen::VectorXcd& z);

}  // namespace nocsim
