#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "fedtgan/encoders.hpp"
#include "fedtgan/error.hpp"
#include "fedtgan/matrix.hpp"
#include "fedtgan/nn.hpp"
#include "fedtgan/random.hpp"

namespace fedtgan {

struct GanConfig {
    std::size_t noise_dim = 128;
    std::vector<std::size_t> gen_hidden{256, 256};
    std::vector<std::size_t> disc_hidden{256, 256};
    std::size_t batch_size = 500;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double tau = 0.2;
    /// One-sided smoothing target for real samples.
    double real_label = 0.9;
    std::uint64_t seed = 0;

    nn::AdamConfig adam() const { return {lr, beta1, beta2, 1e-8}; }
};

struct GanModel {
    nn::NetSpec gen_spec;
    nn::NetSpec disc_spec;
    nn::ModelParams gen;
    nn::ModelParams disc;

    friend bool operator==(const GanModel& a, const GanModel& b) { return a.gen == b.gen && a.disc == b.disc; }
};

struct GanOptimizers {
    nn::AdamState gen;
    nn::AdamState disc;
};

struct EpochLoss {
    double gen = 0.0;
    double disc = 0.0;

    friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

using LossLog = std::vector<EpochLoss>;

inline nn::NetSpec generator_spec(const EncodedLayout& layout, const GanConfig& cfg) {
    nn::NetSpec spec;
    spec.input_width = cfg.noise_dim;
    for (auto w : cfg.gen_hidden) spec.hidden.push_back({w, nn::Activation::Relu});
    for (const auto& seg : layout.segments) {
        if (seg.kind == ColumnKind::Categorical) {
            spec.output.push_back({seg.width, nn::OutputActivation::GumbelSoftmax, cfg.tau});
        } else {
            spec.output.push_back({1, nn::OutputActivation::Tanh, 1.0});
            spec.output.push_back({seg.modes(), nn::OutputActivation::GumbelSoftmax, cfg.tau});
        }
    }
    return spec;
}

inline nn::NetSpec discriminator_spec(const EncodedLayout& layout, const GanConfig& cfg) {
    nn::NetSpec spec;
    spec.input_width = layout.width;
    for (auto w : cfg.disc_hidden) spec.hidden.push_back({w, nn::Activation::LeakyRelu});
    spec.output.push_back({1, nn::OutputActivation::Identity, 1.0});
    return spec;
}

/// Same layout and seed give bit-identical models on every client.
inline GanModel build_gan(const EncodedLayout& layout, const GanConfig& cfg) {
    require(layout.width > 0 && !layout.segments.empty(), ErrorKind::InvalidArgument, "encoded layout is empty");
    GanModel m;
    m.gen_spec = generator_spec(layout, cfg);
    m.disc_spec = discriminator_spec(layout, cfg);
    m.gen = nn::init_params(m.gen_spec, derive_seed(cfg.seed, Stream::GenInit));
    m.disc = nn::init_params(m.disc_spec, derive_seed(cfg.seed, Stream::DiscInit));
    return m;
}

namespace detail {

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace detail

inline Matrix sample_noise(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] = normal(rng);
    return z;
}

/// Random streams of one training step, keyed by (client, epoch, step).
struct StepKey {
    std::uint64_t client = 0;
    std::uint64_t epoch = 0;
    std::uint64_t step = 0;
};

/// Generator output for one step in training mode, with its tape.
inline nn::ForwardResult generate_fakes(const GanModel& model, const GanConfig& cfg, const StepKey& key) {
    const Matrix z = sample_noise(cfg.batch_size, cfg.noise_dim,
                                  derive_seed(cfg.seed, Stream::Noise, {key.client, key.epoch, key.step}));
    return nn::forward(model.gen, model.gen_spec, z,
                       {true, derive_seed(cfg.seed, Stream::Gumbel, {key.client, key.epoch, key.step})});
}

/// One discriminator update on (real, fake); returns the discriminator loss
/// measured before the update.
inline double discriminator_step(GanModel& model, nn::AdamState& opt, const Matrix& real, const Matrix& fake,
                                 const GanConfig& cfg) {
    const auto r = nn::forward(model.disc, model.disc_spec, real);
    const auto f = nn::forward(model.disc, model.disc_spec, fake);
    const double nr = static_cast<double>(real.rows());
    const double nf = static_cast<double>(fake.rows());
    const double t = cfg.real_label;
    Matrix gr(real.rows(), 1), gf(fake.rows(), 1);
    double loss_real = 0.0, loss_fake = 0.0;
    for (Eigen::Index i = 0; i < real.rows(); ++i) {
        const double x = r.output(i, 0);
        loss_real += t * detail::softplus(-x) + (1.0 - t) * detail::softplus(x);
        gr(i, 0) = (detail::sigmoid(x) - t) / nr;
    }
    for (Eigen::Index i = 0; i < fake.rows(); ++i) {
        const double x = f.output(i, 0);
        loss_fake += detail::softplus(x);
        gf(i, 0) = detail::sigmoid(x) / nf;
    }
    auto g = nn::backward(model.disc, model.disc_spec, r.tape, gr);
    const auto g2 = nn::backward(model.disc, model.disc_spec, f.tape, gf);
    for (std::size_t k = 0; k < g.params.size(); ++k) g.params[k] += g2.params[k];
    nn::adam_step(model.disc.flat, g.params, opt, cfg.adam());
    return loss_real / nr + loss_fake / nf;
}

struct GeneratorFeedback {
    Matrix grad_fake;  // d L_gen / d fake batch
    double loss = 0.0;
};

/// Non-saturating generator loss -mean log D(fake) and its gradient with
/// respect to the fake batch, evaluated against the given discriminator.
inline GeneratorFeedback generator_feedback(const GanModel& model, const Matrix& fake) {
    const auto f = nn::forward(model.disc, model.disc_spec, fake);
    const double n = static_cast<double>(fake.rows());
    Matrix g(fake.rows(), 1);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < fake.rows(); ++i) {
        const double x = f.output(i, 0);
        loss += detail::softplus(-x);
        g(i, 0) = (detail::sigmoid(x) - 1.0) / n;
    }
    auto back = nn::backward(model.disc, model.disc_spec, f.tape, g);
    return {std::move(back.input), loss / n};
}

/// Averages generator gradients from several (tape, feedback) pairs and
/// applies one Adam step.
inline void generator_update(GanModel& model, nn::AdamState& opt, std::span<const nn::Tape* const> tapes,
                             std::span<const Matrix* const> grads, const GanConfig& cfg) {
    require(tapes.size() == grads.size() && !tapes.empty(), ErrorKind::InvalidArgument,
            "generator update needs one feedback per tape");
    std::vector<double> total(model.gen.size(), 0.0);
    for (std::size_t i = 0; i < tapes.size(); ++i) {
        const auto g = nn::backward(model.gen, model.gen_spec, *tapes[i], *grads[i]);
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += g.params[k];
    }
    const double count = static_cast<double>(tapes.size());
    for (auto& v : total) v /= count;
    nn::adam_step(model.gen.flat, total, opt, cfg.adam());
}

/// Shuffled row order for one pass over a shard.
inline std::vector<std::size_t> epoch_order(std::size_t rows, std::uint64_t seed, std::uint64_t client,
                                            std::uint64_t epoch, std::uint64_t cycle = 0) {
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, Stream::Shuffle, {client, epoch, cycle});
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

inline Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

/// Runs `epochs` local epochs on an encoded shard. `first_epoch` is the
/// global index of the first epoch; it keys every random stream so repeated
/// rounds continue the same sequence a single long run would use.
inline LossLog train_local(GanModel& model, GanOptimizers& opt, const Matrix& shard, std::size_t epochs,
                           const GanConfig& cfg, std::uint64_t client = 0, std::uint64_t first_epoch = 0) {
    const auto rows = static_cast<std::size_t>(shard.rows());
    require(cfg.batch_size > 0, ErrorKind::InvalidArgument, "batch_size must be positive");
    require(rows >= cfg.batch_size, ErrorKind::ShardTooSmall,
            "shard has " + std::to_string(rows) + " rows, batch_size is " + std::to_string(cfg.batch_size));
    require(static_cast<std::size_t>(shard.cols()) == model.disc_spec.input_width, ErrorKind::WidthMismatch,
            "encoded shard width does not match the model");

    LossLog log;
    const std::size_t batches = rows / cfg.batch_size;
    for (std::size_t e = 0; e < epochs; ++e) {
        const std::uint64_t epoch = first_epoch + e;
        const auto order = epoch_order(rows, cfg.seed, client, epoch);
        EpochLoss sum;
        for (std::size_t b = 0; b < batches; ++b) {
            const Matrix real =
                gather_rows(shard, std::span(order).subspan(b * cfg.batch_size, cfg.batch_size));
            const auto fake = generate_fakes(model, cfg, {client, epoch, b});
            sum.disc += discriminator_step(model, opt.disc, real, fake.output, cfg);
            const auto fb = generator_feedback(model, fake.output);
            sum.gen += fb.loss;
            const nn::Tape* tapes[] = {&fake.tape};
            const Matrix* grads[] = {&fb.grad_fake};
            generator_update(model, opt.gen, tapes, grads, cfg);
        }
        log.push_back({sum.gen / static_cast<double>(batches), sum.disc / static_cast<double>(batches)});
    }
    return log;
}

/// Evaluation-mode generator output (no Gumbel noise) for `n` noise vectors.
inline Matrix generate_encoded(const nn::ModelParams& gen, const nn::NetSpec& gen_spec, std::size_t n,
                               std::uint64_t seed) {
    constexpr std::size_t kChunk = 4096;
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(gen_spec.output_width()));
    for (std::size_t start = 0, chunk = 0; start < n; start += kChunk, ++chunk) {
        const std::size_t len = std::min(kChunk, n - start);
        const Matrix z = sample_noise(len, gen_spec.input_width, derive_seed(seed, Stream::Eval, {chunk}));
        out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) =
            nn::forward(gen, gen_spec, z).output;
    }
    return out;
}

inline Table sample_synthetic(const nn::ModelParams& gen, const nn::NetSpec& gen_spec, std::size_t n,
                              const std::vector<ColumnMeta>& schema, const EncodedLayout& layout,
                              std::span<const ColumnEncoder> encoders, std::uint64_t seed) {
    require(n >= 1, ErrorKind::InvalidArgument, "sample count must be positive");
    return decode_rows(generate_encoded(gen, gen_spec, n, seed), schema, layout, encoders);
}

inline Table sample_synthetic(const GanModel& model, std::size_t n, const std::vector<ColumnMeta>& schema,
                              const EncodedLayout& layout, std::span<const ColumnEncoder> encoders,
                              std::uint64_t seed) {
    return sample_synthetic(model.gen, model.gen_spec, n, schema, layout, encoders, seed);
}

}  // namespace fedtgan
