#include "nocsim/channel.hpp"

#include <cmath>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

ChannelKind channel_kind_from_string(const std::string& name, double k_factor) {
    if (name == "awgn") return ChannelKind::awgn();
    if (name == "rayleigh") return ChannelKind::rayleigh();
    if (name == "rician") {
        if (!(k_factor >= 0) || !std::isfinite(k_factor))
            throw ConfigError("rician k_factor must be finite and nonnegative");
        return ChannelKind::rician(k_factor);
    }
    throw ConfigError("unknown channel kind '" + name + "'");
}

std::string to_string(const ChannelKind& kind) {
    switch (kind.fading) {
        case Fading::Awgn: return "awgn";
        case Fading::Rayleigh: return "rayleigh";
        case Fading::Rician: return "rician";
    }
    return "awgn";
}

double snr_to_sigma2(double snr_db, double power) {
    if (!(power > 0)) throw ConfigError("snr_to_sigma2: power must be positive");
    return power * std::pow(10.0, -snr_db / 10.0);
}

NoiseSpec make_noise(double snr_db, double power) {
    return {snr_db, power, snr_to_sigma2(snr_db, power)};
}

ChannelRealization draw_channel(const ChannelKind& kind, int num_users, Rng& rng) {
    if (num_users < 1) throw ConfigError("draw_channel: num_users must be >= 1");
    ChannelRealization ch;
    ch.kind = kind;
    ch.gains.resize(num_users, num_users);
    for (int j = 0; j < num_users; ++j)
        for (int i = 0; i < num_users; ++i) {
            switch (kind.fading) {
                case Fading::Awgn:
                    ch.gains(j, i) = {1.0, 0.0};
                    break;
                case Fading::Rayleigh:
                    ch.gains(j, i) = rng.cgaussian(1.0);
                    break;
                case Fading::Rician: {
                    const double k = kind.k_factor;
                    const std::complex<double> los{std::sqrt(k / (k + 1)), 0.0};
                    ch.gains(j, i) = los + rng.cgaussian(1.0 / (k + 1));
                    break;
                }
            }
        }
    return ch;
}

ChannelRealization draw_channel(const ChannelKind& kind, int num_users,
                                std::uint64_t seed) {
    Rng rng(seed);
    return draw_channel(kind, num_users, rng);
}

std::vector<Eigen::VectorXcd> transmit(const std::vector<Eigen::VectorXcd>& features,
                                       const ChannelRealization& ch,
                                       const NoiseSpec& noise, Rng& rng) {
    const int n = static_cast<int>(features.size());
    if (n == 0) throw LengthMismatch("transmit: no user features");
    if (ch.num_users() != n)
        throw LengthMismatch("transmit: channel is for " +
                             std::to_string(ch.num_users()) + " users, got " +
                             std::to_string(n));
    const Eigen::Index m = features[0].size();
    for (const auto& z : features)
        if (z.size() != m)
            throw LengthMismatch("transmit: user feature lengths differ");

    const double amp = std::sqrt(noise.power);
    std::vector<Eigen::VectorXcd> received(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(m);
        for (int j = 0; j < n; ++j) y += (amp * ch.gains(j, i)) * features[j];
        if (noise.sigma2 > 0)
            for (Eigen::Index s = 0; s < m; ++s) y(s) += rng.cgaussian(noise.sigma2);
        received[i] = std::move(y);
    }
    return received;
}

std::vector<Eigen::VectorXcd> transmit(const std::vector<Eigen::VectorXcd>& features,
                                       const ChannelRealization& ch,
                                       const NoiseSpec& noise, std::uint64_t seed) {
    Rng rng(seed);
    return transmit(features, ch, noise, rng);
}

Eigen::VectorXcd pack_complex(const Eigen::VectorXd& x) {
    if (x.size() % 2 != 0)
        throw OddLength("pack_complex: length " + std::to_string(x.size()) +
                        " is odd");
    Eigen::VectorXcd z(x.size() / 2);
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = {x(2 * i), x(2 * i + 1)};
    return z;
}

Eigen::VectorXd unpack_complex(const Eigen::VectorXcd& z) {
    Eigen::VectorXd x(2 * z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        x(2 * i) = z(i).real();
        x(2 * i + 1) = z(i).imag();
    }
    return x;
}

}  // namespace nocsim
