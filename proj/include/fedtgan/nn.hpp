#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedtgan/error.hpp"
#include "fedtgan/matrix.hpp"
#include "fedtgan/random.hpp"

namespace fedtgan::nn {

enum class Activation { Relu, LeakyRelu, Tanh, Identity };
enum class OutputActivation { Identity, Tanh, Softmax, GumbelSoftmax };

inline constexpr double kLeakySlope = 0.2;

struct HiddenLayer {
    std::size_t width = 0;
    Activation activation = Activation::Relu;
};

struct OutputSegment {
    std::size_t width = 0;
    OutputActivation activation = OutputActivation::Identity;
    /// Temperature for Softmax / GumbelSoftmax segments.
    double tau = 1.0;
};

struct NetSpec {
    std::size_t input_width = 0;
    std::vector<HiddenLayer> hidden;
    std::vector<OutputSegment> output;

    std::size_t output_width() const {
        std::size_t w = 0;
        for (const auto& s : output) w += s.width;
        return w;
    }

    /// Number of dense layers (hidden layers plus the output layer).
    std::size_t layers() const { return hidden.size() + 1; }

    std::size_t layer_input(std::size_t l) const { return l == 0 ? input_width : hidden[l - 1].width; }
    std::size_t layer_output(std::size_t l) const { return l < hidden.size() ? hidden[l].width : output_width(); }

    void validate() const {
        require(input_width > 0, ErrorKind::InvalidArgument, "network input width must be positive");
        require(!output.empty(), ErrorKind::InvalidArgument, "network needs at least one output segment");
        for (const auto& h : hidden) require(h.width > 0, ErrorKind::InvalidArgument, "hidden widths must be positive");
        for (const auto& s : output) {
            require(s.width > 0, ErrorKind::InvalidArgument, "output segment widths must be positive");
            require(s.tau > 0.0, ErrorKind::InvalidArgument, "temperature must be positive");
        }
    }
};

struct ParamBlock {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return rows * cols; }

    friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

/// Flat parameter vector plus the manifest describing how it splits into
/// weight matrices (fan_in x fan_out) and bias rows. Layer l owns blocks 2l
/// (weight) and 2l+1 (bias).
struct ModelParams {
    std::vector<double> flat;
    std::vector<ParamBlock> manifest;

    std::size_t size() const { return flat.size(); }

    Eigen::Map<Matrix> view(std::size_t block) {
        const auto& b = manifest.at(block);
        return {flat.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
    }
    Eigen::Map<const Matrix> view(std::size_t block) const {
        const auto& b = manifest.at(block);
        return {flat.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
    }

    void validate() const {
        std::size_t expected = 0;
        for (const auto& b : manifest) {
            require(b.offset == expected, ErrorKind::InvalidArgument, "manifest block '" + b.name + "' is not contiguous");
            expected += b.size();
        }
        require(expected == flat.size(), ErrorKind::InvalidArgument,
                "manifest covers " + std::to_string(expected) + " values, flat vector has " + std::to_string(flat.size()));
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline ModelParams make_manifest(const NetSpec& spec) {
    spec.validate();
    ModelParams p;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const std::size_t in = spec.layer_input(l), out = spec.layer_output(l);
        p.manifest.push_back({"dense" + std::to_string(l) + ".weight", in, out, offset});
        offset += in * out;
        p.manifest.push_back({"dense" + std::to_string(l) + ".bias", 1, out, offset});
        offset += out;
    }
    p.flat.assign(offset, 0.0);
    return p;
}

/// Xavier-uniform weights, zero biases.
inline ModelParams init_params(const NetSpec& spec, std::uint64_t seed) {
    ModelParams p = make_manifest(spec);
    Rng rng(seed);
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const auto& b = p.manifest[2 * l];
        const double limit = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (std::size_t k = 0; k < b.size(); ++k) p.flat[b.offset + k] = u(rng);
    }
    return p;
}

/// softmax((logits + g) / tau) with g ~ Gumbel(0, 1) when `noisy`, plain
/// softmax(logits / tau) otherwise.
inline void gumbel_softmax_inplace(std::span<double> row, double tau, bool noisy, Rng& rng) {
    require(tau > 0.0, ErrorKind::InvalidArgument, "temperature must be positive");
    if (noisy) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : row) {
            double x = u(rng);
            x = std::clamp(x, 1e-300, 1.0 - 1e-16);
            v += -std::log(-std::log(x));
        }
    }
    double m = -std::numeric_limits<double>::infinity();
    for (auto& v : row) m = std::max(m, v / tau);
    double total = 0.0;
    for (auto& v : row) total += v = std::exp(v / tau - m);
    for (auto& v : row) v /= total;
}

inline std::vector<double> gumbel_softmax(std::span<const double> logits, double tau, std::uint64_t seed,
                                          bool noisy = true) {
    std::vector<double> row(logits.begin(), logits.end());
    Rng rng(seed);
    gumbel_softmax_inplace(row, tau, noisy, rng);
    return row;
}

struct ForwardOptions {
    /// Training mode adds Gumbel noise to GumbelSoftmax segments.
    bool train = false;
    std::uint64_t gumbel_seed = 0;
};

/// Intermediates kept by forward() for backward().
struct Tape {
    std::vector<Matrix> inputs;  // input to each dense layer
    std::vector<Matrix> pre;     // pre-activation of each hidden layer
    Matrix output;               // final post-activation output
};

struct ForwardResult {
    Matrix output;
    Tape tape;
};

namespace detail {

inline void activate(Matrix& m, Activation a) {
    switch (a) {
        case Activation::Relu: m = m.cwiseMax(0.0); break;
        case Activation::LeakyRelu: m = m.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; }); break;
        case Activation::Tanh: m = m.array().tanh().matrix(); break;
        case Activation::Identity: break;
    }
}

inline void activation_grad(Matrix& grad, const Matrix& pre, Activation a) {
    switch (a) {
        case Activation::Relu: grad.array() *= (pre.array() > 0.0).cast<double>(); break;
        case Activation::LeakyRelu:
            grad.array() *= pre.unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakySlope; }).array();
            break;
        case Activation::Tanh: grad.array() *= 1.0 - pre.array().tanh().square(); break;
        case Activation::Identity: break;
    }
}

}  // namespace detail

inline ForwardResult forward(const ModelParams& params, const NetSpec& spec, const Matrix& batch,
                             const ForwardOptions& opts = {}) {
    require(static_cast<std::size_t>(batch.cols()) == spec.input_width, ErrorKind::WidthMismatch,
            "batch width " + std::to_string(batch.cols()) + " != network input width " + std::to_string(spec.input_width));
    require(params.manifest.size() == 2 * spec.layers(), ErrorKind::InvalidArgument,
            "parameter manifest does not match the network");
    ForwardResult r;
    Matrix x = batch;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        Matrix z = x * params.view(2 * l);
        z.rowwise() += params.view(2 * l + 1).row(0);
        r.tape.inputs.push_back(std::move(x));
        if (l < spec.hidden.size()) {
            r.tape.pre.push_back(z);
            detail::activate(z, spec.hidden[l].activation);
        }
        x = std::move(z);
    }

    Rng rng(opts.gumbel_seed);
    const auto rows = x.rows();
    for (Eigen::Index i = 0; i < rows; ++i) {
        std::size_t offset = 0;
        for (const auto& seg : spec.output) {
            std::span<double> cells(&x(i, static_cast<Eigen::Index>(offset)), seg.width);
            switch (seg.activation) {
                case OutputActivation::Identity: break;
                case OutputActivation::Tanh:
                    for (auto& v : cells) v = std::tanh(v);
                    break;
                case OutputActivation::Softmax: gumbel_softmax_inplace(cells, seg.tau, false, rng); break;
                case OutputActivation::GumbelSoftmax: gumbel_softmax_inplace(cells, seg.tau, opts.train, rng); break;
            }
            offset += seg.width;
        }
    }
    r.tape.output = x;
    r.output = std::move(x);
    return r;
}

struct Gradients {
    std::vector<double> params;  // aligned with ModelParams::flat
    Matrix input;                // d loss / d batch
};

/// Reverse-mode pass through the computation recorded in `tape`.
inline Gradients backward(const ModelParams& params, const NetSpec& spec, const Tape& tape, const Matrix& upstream) {
    require(upstream.rows() == tape.output.rows() && upstream.cols() == tape.output.cols(), ErrorKind::WidthMismatch,
            "upstream gradient shape does not match the recorded output");
    require(tape.inputs.size() == spec.layers(), ErrorKind::InvalidArgument, "tape does not match the network");

    // Output activations.
    Matrix grad = upstream;
    const Matrix& y = tape.output;
    for (Eigen::Index i = 0; i < grad.rows(); ++i) {
        std::size_t offset = 0;
        for (const auto& seg : spec.output) {
            const auto o = static_cast<Eigen::Index>(offset);
            const auto w = static_cast<Eigen::Index>(seg.width);
            auto g = grad.row(i).segment(o, w);
            auto yy = y.row(i).segment(o, w);
            switch (seg.activation) {
                case OutputActivation::Identity: break;
                case OutputActivation::Tanh: g.array() *= 1.0 - yy.array().square(); break;
                case OutputActivation::Softmax:
                case OutputActivation::GumbelSoftmax: {
                    const double dot = g.dot(yy);
                    g = (yy.array() * (g.array() - dot) / seg.tau).matrix();
                    break;
                }
            }
            offset += seg.width;
        }
    }

    Gradients out;
    out.params.assign(params.size(), 0.0);
    for (std::size_t l = spec.layers(); l-- > 0;) {
        const auto& wb = params.manifest[2 * l];
        const auto& bb = params.manifest[2 * l + 1];
        Eigen::Map<Matrix> dw(out.params.data() + wb.offset, static_cast<Eigen::Index>(wb.rows),
                              static_cast<Eigen::Index>(wb.cols));
        Eigen::Map<Matrix> db(out.params.data() + bb.offset, 1, static_cast<Eigen::Index>(bb.cols));
        dw.noalias() = tape.inputs[l].transpose() * grad;
        db = grad.colwise().sum();
        Matrix dx = grad * params.view(2 * l).transpose();
        if (l > 0) detail::activation_grad(dx, tape.pre[l - 1], spec.hidden[l - 1].activation);
        grad = std::move(dx);
    }
    out.input = std::move(grad);
    return out;
}

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam update, in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg) {
    require(params.size() == grads.size(), ErrorKind::InvalidArgument,
            "parameter and gradient lengths differ (" + std::to_string(params.size()) + " vs " +
                std::to_string(grads.size()) + ")");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    require(state.m.size() == params.size(), ErrorKind::InvalidArgument, "optimizer state length mismatch");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * grads[k];
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * grads[k] * grads[k];
        const double mhat = state.m[k] / c1;
        const double vhat = state.v[k] / c2;
        params[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace fedtgan::nn
