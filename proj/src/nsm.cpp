#include "nocsim/nsm.hpp"

#include <string>

#include "nocsim/errors.hpp"
#include "nocsim/rng.hpp"

namespace nocsim {

void NsmDims::validate() const {
    if (channels < 1 || latent < 1 || length < 1 || depth < 1 || tokens < 1)
        throw ConfigError("nsm dims must all be positive");
    if (channels % 2 != 0)
        throw ConfigError("nsm channels must be even");
}

int NsmParameters::param_count() const {
    int n = fu0.param_count();
    for (const auto& f : fa_ma) n += f.param_count();
    for (const auto& f : fa_s) n += f.param_count();
    for (const auto& a : fu) n += a.param_count();
    return n;
}

void NsmParameters::append_to(std::vector<double>& out) const {
    append_params(fu0, out);
    for (int j = 0; j < dims.depth; ++j) {
        append_params(fa_ma[j], out);
        append_params(fa_s[j], out);
        append_params(fu[j], out);
    }
}

std::size_t NsmParameters::read_from(const std::vector<double>& v, std::size_t pos) {
    pos = read_params(fu0, v, pos);
    for (int j = 0; j < dims.depth; ++j) {
        pos = read_params(fa_ma[j], v, pos);
        pos = read_params(fa_s[j], v, pos);
        pos = read_params(fu[j], v, pos);
    }
    return pos;
}

void NsmParameters::set_zero() {
    fu0.set_zero();
    for (auto& f : fa_ma) f.set_zero();
    for (auto& f : fa_s) f.set_zero();
    for (auto& a : fu) a.set_zero();
}

NsmParameters init_nsm(const NsmDims& dims, std::uint64_t seed) {
    dims.validate();
    Rng rng(seed);
    NsmParameters p;
    p.dims = dims;
    p.fu0 = init_affine(dims.latent, dims.channels, rng);
    for (int j = 0; j < dims.depth; ++j) {
        p.fa_ma.push_back(init_fa(dims.latent, dims.length, dims.latent, rng));
        p.fa_s.push_back(init_fa(dims.latent, 1, dims.latent, rng));
        const int out = (j + 1 == dims.depth) ? dims.channels : dims.latent;
        p.fu.push_back(init_affine(out, dims.latent, rng));
    }
    return p;
}

NsmParameters zeros_like(const NsmParameters& p) {
    NsmParameters z;
    z.dims = p.dims;
    z.fu0 = zeros_like(p.fu0);
    for (const auto& f : p.fa_ma) z.fa_ma.push_back(zeros_like(f));
    for (const auto& f : p.fa_s) z.fa_s.push_back(zeros_like(f));
    for (const auto& a : p.fu) z.fu.push_back(zeros_like(a));
    return z;
}

namespace {

void check_shapes(const Eigen::MatrixXd& input, const std::vector<int>& codeword,
                  const NsmParameters& p) {
    const NsmDims& d = p.dims;
    if (input.rows() != d.tokens || input.cols() != d.channels)
        throw ShapeMismatch("nsm: input is " + std::to_string(input.rows()) + "x" +
                            std::to_string(input.cols()) + ", expected " +
                            std::to_string(d.tokens) + "x" +
                            std::to_string(d.channels));
    if (static_cast<int>(codeword.size()) != d.length)
        throw ShapeMismatch("nsm: codeword length " +
                            std::to_string(codeword.size()) + ", expected " +
                            std::to_string(d.length));
    if (static_cast<int>(p.fa_ma.size()) != d.depth ||
        static_cast<int>(p.fa_s.size()) != d.depth ||
        static_cast<int>(p.fu.size()) != d.depth)
        throw ShapeMismatch("nsm: parameter blocks do not match depth");
}

}  // namespace

Eigen::MatrixXd nsm_forward(const Eigen::MatrixXd& input,
                            const std::vector<int>& codeword, double snr_db,
                            const NsmParameters& params, NsmActivations* acts) {
    check_shapes(input, codeword, params);
    const NsmDims& d = params.dims;

    Eigen::MatrixXd cw(1, d.length);
    for (int i = 0; i < d.length; ++i) cw(0, i) = codeword[i];
    Eigen::MatrixXd snr(1, 1);
    snr(0, 0) = snr_db;

    NsmActivations local;
    NsmActivations& ac = acts ? *acts : local;
    ac.a.resize(d.depth);
    ac.b.resize(d.depth);
    ac.k.resize(d.depth + 1);
    ac.g.resize(d.depth);
    ac.fa_ma_cache.resize(d.depth);
    ac.fa_s_cache.resize(d.depth);

    ac.k[0] = params.fu0.forward(input);
    check_finite(ac.k[0], "nsm layer 0");
    for (int j = 0; j < d.depth; ++j) {
        ac.a[j] = fa_forward(params.fa_ma[j], cw, &ac.fa_ma_cache[j]);
        ac.b[j] = fa_forward(params.fa_s[j], snr, &ac.fa_s_cache[j]);
        const Eigen::RowVectorXd ab = ac.a[j].cwiseProduct(ac.b[j]);
        ac.g[j] = ac.k[j].array().rowwise() * ab.array();
        ac.k[j + 1] = params.fu[j].forward(ac.g[j]);
        check_finite(ac.k[j + 1], "nsm layer " + std::to_string(j + 1));
    }
    ac.gate = sigmoid(ac.k[d.depth]);
    Eigen::MatrixXd output = input.cwiseProduct(ac.gate);
    check_finite(output, "nsm output");
    return output;
}

Eigen::MatrixXd nsm_backward(const Eigen::MatrixXd& input,
                             const NsmParameters& params,
                             const NsmActivations& acts,
                             const Eigen::MatrixXd& d_output,
                             NsmParameters& grad) {
    const NsmDims& d = params.dims;
    if (input.rows() != d.tokens || input.cols() != d.channels)
        throw ShapeMismatch("nsm backward: input shape");
    if (d_output.rows() != input.rows() || d_output.cols() != input.cols())
        throw ShapeMismatch("nsm backward: upstream gradient shape");
    if (static_cast<int>(acts.g.size()) != d.depth)
        throw ShapeMismatch("nsm backward: activations do not match depth");

    Eigen::MatrixXd d_input = d_output.cwiseProduct(acts.gate);
    Eigen::MatrixXd d_k = d_output.cwiseProduct(input)
                              .cwiseProduct(acts.gate)
                              .cwiseProduct((1.0 - acts.gate.array()).matrix());
    for (int j = d.depth - 1; j >= 0; --j) {
        Eigen::MatrixXd d_g = params.fu[j].backward(acts.g[j], d_k, grad.fu[j]);
        const Eigen::RowVectorXd ab = acts.a[j].cwiseProduct(acts.b[j]);
        d_k = d_g.array().rowwise() * ab.array();
        const Eigen::RowVectorXd d_ab =
            d_g.cwiseProduct(acts.k[j]).colwise().sum();
        fa_backward(params.fa_ma[j], acts.fa_ma_cache[j],
                    d_ab.cwiseProduct(acts.b[j]), grad.fa_ma[j]);
        fa_backward(params.fa_s[j], acts.fa_s_cache[j],
                    d_ab.cwiseProduct(acts.a[j]), grad.fa_s[j]);
    }
    d_input += params.fu0.backward(input, d_k, grad.fu0);
    return d_input;
}

}  // namespace nocsim
