#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <numeric>
#include <optional>

#include "fedtgan/gan.hpp"
#include "fedtgan/gmm.hpp"
#include "fedtgan/similarity.hpp"
#include "fedtgan/transport.hpp"
#include "fedtgan/wire.hpp"

namespace fedtgan {

enum class Mode { Fed, Vanilla, Centralized, Md };

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Fed: return "fed";
        case Mode::Vanilla: return "vanilla";
        case Mode::Centralized: return "centralized";
        case Mode::Md: return "md";
    }
    return "?";
}

inline Mode parse_mode(std::string_view s) {
    if (s == "fed") return Mode::Fed;
    if (s == "vanilla") return Mode::Vanilla;
    if (s == "centralized") return Mode::Centralized;
    if (s == "md") return Mode::Md;
    throw Error(ErrorKind::Config, "unknown mode '" + std::string(s) + "' (expected fed, vanilla, centralized or md)");
}

/// Deterministic stand-in for elapsed time: compute steps on the critical
/// path plus transfer time at a fixed bandwidth.
struct CostModel {
    double step_seconds = 1e-3;
    double bytes_per_second = 1e8;
};

struct FederationConfig {
    Mode mode = Mode::Fed;
    GanConfig gan;
    std::size_t local_epochs = 1;
    /// md only: epochs between discriminator swaps; 0 disables swapping.
    std::size_t swap_interval = 1;
    std::size_t max_modes = kDefaultMaxModes;
    std::size_t divergence_samples = kDivergenceSampleSize;
    Fusion fusion = Fusion::Multiplicative;
    std::uint64_t seed = 0;
    std::chrono::milliseconds timeout = std::chrono::hours(1);
    CostModel cost;
};

/// Total aggregations when `total_epochs` local epochs are split into rounds
/// of `local_epochs`.
inline std::size_t rounds_for(std::size_t total_epochs, std::size_t local_epochs) {
    require(local_epochs > 0, ErrorKind::Config, "local_epochs must be positive");
    return total_epochs / local_epochs;
}

struct RoundRecord {
    std::size_t round = 0;
    double wall_seconds = 0.0;
    double modeled_seconds = 0.0;
    std::uint64_t bytes_sent = 0;      // federator -> clients
    std::uint64_t bytes_received = 0;  // clients -> federator
    std::uint64_t steps = 0;           // batch steps on the critical path
    std::vector<EpochLoss> client_losses;
    EpochLoss loss;  // mean over clients
};

// ---------------------------------------------------------------------------
// Shared setup logic (used by clients, the federator and centralized mode).

inline bool same_schema(const std::vector<ColumnMeta>& a, const std::vector<ColumnMeta>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j].name != b[j].name || a[j].kind != b[j].kind) return false;
    return true;
}

/// What a client reports about its shard: frequencies for categorical
/// columns, a locally fitted mixture for continuous ones, and its row count.
inline wire::StatsReport local_statistics(const Table& shard, std::uint32_t client, std::uint64_t seed,
                                          std::size_t max_modes) {
    wire::StatsReport r;
    r.client_id = client;
    r.rows = shard.rows();
    r.schema = shard.schema();
    for (std::size_t j = 0; j < shard.column_count(); ++j) {
        if (shard.meta(j).kind == ColumnKind::Categorical)
            r.columns.emplace_back(local_categorical_stats(shard, shard.meta(j).name));
        else
            r.columns.emplace_back(
                fit_gmm(shard.continuous(j), max_modes, derive_seed(seed, Stream::LocalGmm, {j})));
    }
    return r;
}

struct GlobalSetup {
    std::vector<ColumnMeta> schema;
    std::vector<ColumnEncoder> encoders;
    EncodedLayout layout;
    std::vector<std::uint64_t> counts;  // N_i
    DivergenceMatrix divergence;
    WeightTrace trace;
    std::vector<double> weights;  // weights actually applied
};

/// Builds global encoders and aggregation weights from client reports.
inline GlobalSetup build_global(std::span<const wire::StatsReport> reports, const FederationConfig& cfg) {
    require(!reports.empty(), ErrorKind::InvalidArgument, "no client reports");
    const std::size_t p = reports.size();
    GlobalSetup g;
    g.schema = reports[0].schema;
    for (auto& m : g.schema) m.index = static_cast<std::size_t>(&m - g.schema.data());
    const std::size_t q = g.schema.size();
    require(q > 0, ErrorKind::SchemaMismatch, "clients reported an empty schema");

    for (std::size_t i = 0; i < p; ++i) {
        const auto& r = reports[i];
        require(r.client_id == i, ErrorKind::Protocol,
                "report " + std::to_string(i) + " came from client " + std::to_string(r.client_id));
        require(same_schema(r.schema, g.schema), ErrorKind::SchemaMismatch,
                "client " + std::to_string(i) + " has a different schema from client 0");
        require(r.columns.size() == q, ErrorKind::SchemaMismatch,
                "client " + std::to_string(i) + " reported " + std::to_string(r.columns.size()) + " statistics");
        require(r.rows >= cfg.gan.batch_size, ErrorKind::ShardTooSmall,
                "client " + std::to_string(i) + " holds " + std::to_string(r.rows) + " rows, batch_size is " +
                    std::to_string(cfg.gan.batch_size));
        for (std::size_t j = 0; j < q; ++j) {
            const bool cat = g.schema[j].kind == ColumnKind::Categorical;
            if (cat) {
                const auto* s = std::get_if<CategoricalStats>(&r.columns[j]);
                require(s != nullptr, ErrorKind::SchemaMismatch,
                        "client " + std::to_string(i) + " sent a mixture for categorical '" + g.schema[j].name + "'");
                require(s->total() == r.rows, ErrorKind::Protocol,
                        "client " + std::to_string(i) + " frequencies for '" + g.schema[j].name +
                            "' do not add up to its row count");
            } else {
                const auto* m = std::get_if<GmmParams>(&r.columns[j]);
                require(m != nullptr, ErrorKind::SchemaMismatch,
                        "client " + std::to_string(i) + " sent frequencies for continuous '" + g.schema[j].name + "'");
                m->validate(cfg.max_modes);
            }
        }
        g.counts.push_back(r.rows);
    }

    std::vector<ColumnStatistic> global(q);
    for (std::size_t j = 0; j < q; ++j) {
        if (g.schema[j].kind == ColumnKind::Categorical) {
            std::vector<CategoricalStats> per_client;
            for (const auto& r : reports) per_client.push_back(std::get<CategoricalStats>(r.columns[j]));
            auto agg = aggregate_categorical(per_client);
            g.encoders.emplace_back(std::move(agg.encoder));
            global[j] = std::move(agg.counts);
        } else {
            std::vector<LocalMixture> locals;
            for (const auto& r : reports) locals.push_back({std::get<GmmParams>(r.columns[j]), r.rows});
            auto vgm = aggregate_gmm(locals, cfg.max_modes, derive_seed(cfg.seed, Stream::GlobalGmm, {j}));
            g.encoders.emplace_back(vgm);
            global[j] = std::move(vgm);
        }
    }
    g.layout = make_layout(g.schema, g.encoders);

    std::vector<ClientStatistics> locals;
    for (const auto& r : reports) locals.push_back({r.columns, r.rows});
    g.divergence = divergence_matrix(g.schema, global, locals, cfg.divergence_samples,
                                     derive_seed(cfg.seed, Stream::Divergence, {}));
    g.trace = client_weights(g.divergence, g.counts, cfg.fusion);
    if (cfg.mode == Mode::Fed || cfg.mode == Mode::Centralized)
        g.weights = g.trace.weights;
    else
        g.weights.assign(p, 1.0 / static_cast<double>(p));
    return g;
}

/// sum_i weights[i] * models[i], element-wise over flat vectors.
inline nn::ModelParams weighted_average(std::span<const nn::ModelParams* const> models, std::span<const double> weights) {
    require(!models.empty() && models.size() == weights.size(), ErrorKind::InvalidArgument,
            "need one weight per model");
    nn::ModelParams out;
    out.manifest = models[0]->manifest;
    out.flat.assign(models[0]->size(), 0.0);
    for (std::size_t i = 0; i < models.size(); ++i) {
        require(models[i]->manifest == out.manifest && models[i]->size() == out.size(), ErrorKind::Protocol,
                "model " + std::to_string(i) + " has a different parameter layout");
        const double w = weights[i];
        const auto& src = models[i]->flat;
        for (std::size_t k = 0; k < out.flat.size(); ++k) out.flat[k] += w * src[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Client role.

class ClientNode : public Endpoint {
public:
    ClientNode(std::uint32_t id, Table shard) : id_(id), shard_(std::move(shard)) {}

    wire::Bytes handle(const wire::Bytes& request) override {
        std::lock_guard lock(mu_);
        try {
            const auto msg = wire::decode(request);
            require(msg.round >= last_round_, ErrorKind::Protocol,
                    "round number went backwards (" + std::to_string(msg.round) + " after " +
                        std::to_string(last_round_) + ")");
            last_round_ = msg.round;
            return wire::encode({msg.round, dispatch(msg)});
        } catch (const Error& e) {
            return wire::encode({last_round_, wire::Failure{id_, e.kind(), e.what()}});
        } catch (const std::exception& e) {
            return wire::encode({last_round_, wire::Failure{id_, ErrorKind::ClientFailure, e.what()}});
        }
    }

    std::uint32_t id() const { return id_; }
    const Table& shard() const { return shard_; }
    const std::optional<GanModel>& model() const { return model_; }

private:
    wire::Body dispatch(const wire::Message& msg) {
        return std::visit(
            [&](const auto& body) -> wire::Body {
                using T = std::decay_t<decltype(body)>;
                if constexpr (std::is_same_v<T, wire::StatsRequest>) {
                    return local_statistics(shard_, id_, body.seed, body.max_modes);
                } else if constexpr (std::is_same_v<T, wire::EncoderBundle>) {
                    return on_bundle(body);
                } else if constexpr (std::is_same_v<T, wire::TrainOrder>) {
                    return on_train(body);
                } else if constexpr (std::is_same_v<T, wire::ModelBroadcast>) {
                    return on_broadcast(body);
                } else if constexpr (std::is_same_v<T, wire::FakeBatch>) {
                    return on_fake_batch(body);
                } else if constexpr (std::is_same_v<T, wire::SwapOrder>) {
                    ready();
                    const auto n = body.permutation.size();
                    std::vector<bool> seen(n, false);
                    for (auto v : body.permutation) {
                        require(v < n && !seen[v], ErrorKind::Protocol, "swap order is not a permutation");
                        seen[v] = true;
                    }
                    wire::ModelUpload up;
                    up.client_id = id_;
                    up.disc = model_->disc;
                    return up;
                } else if constexpr (std::is_same_v<T, wire::Shutdown>) {
                    return wire::Ack{id_};
                } else {
                    throw Error(ErrorKind::Protocol,
                                "client cannot handle " + std::string(wire::to_string(wire::tag_of(msg.body))));
                }
            },
            msg.body);
    }

    void ready() const { require(model_.has_value(), ErrorKind::Protocol, "client has not received encoders yet"); }

    wire::Body on_bundle(const wire::EncoderBundle& b) {
        require(same_schema(b.schema, shard_.schema()), ErrorKind::SchemaMismatch,
                "encoder bundle schema differs from the local table");
        require(make_layout(b.schema, b.encoders) == b.layout, ErrorKind::Protocol,
                "encoder bundle layout is inconsistent with its encoders");
        encoders_ = b.encoders;
        layout_ = b.layout;
        cfg_ = b.gan;
        encoded_ = encode_table(shard_, layout_, encoders_);
        model_ = build_gan(layout_, cfg_);
        opt_ = {};
        return wire::Ack{id_};
    }

    wire::Body on_train(const wire::TrainOrder& t) {
        ready();
        const auto log = train_local(*model_, opt_, encoded_, t.epochs, cfg_, id_, t.first_epoch);
        wire::ModelUpload up;
        up.client_id = id_;
        up.gen = model_->gen;
        up.disc = model_->disc;
        for (const auto& e : log) {
            up.gen_loss += e.gen / static_cast<double>(log.size());
            up.disc_loss += e.disc / static_cast<double>(log.size());
        }
        up.steps = t.epochs * (shard_.rows() / cfg_.batch_size);
        return up;
    }

    wire::Body on_broadcast(const wire::ModelBroadcast& b) {
        ready();
        auto adopt = [](nn::ModelParams& mine, const nn::ModelParams& theirs) {
            if (theirs.flat.empty() && theirs.manifest.empty()) return;
            require(theirs.manifest == mine.manifest, ErrorKind::Protocol, "broadcast model has a different layout");
            mine.flat = theirs.flat;
        };
        adopt(model_->gen, b.gen);
        adopt(model_->disc, b.disc);
        return wire::Ack{id_};
    }

    wire::Body on_fake_batch(const wire::FakeBatch& f) {
        ready();
        require(static_cast<std::size_t>(f.rows.cols()) == layout_.width, ErrorKind::WidthMismatch,
                "fake batch width does not match the layout");
        const std::size_t rows = shard_.rows();
        const std::size_t batches = rows / cfg_.batch_size;
        const std::size_t cycle = f.step / batches, b = f.step % batches;
        if (cycle != order_cycle_ || f.epoch != order_epoch_ || order_.empty()) {
            order_ = epoch_order(rows, cfg_.seed, id_, f.epoch, cycle);
            order_epoch_ = f.epoch;
            order_cycle_ = cycle;
        }
        const Matrix real = gather_rows(encoded_, std::span(order_).subspan(b * cfg_.batch_size, cfg_.batch_size));
        wire::DiscFeedback out;
        out.client_id = id_;
        out.disc_loss = discriminator_step(*model_, opt_.disc, real, f.rows, cfg_);
        auto fb = generator_feedback(*model_, f.rows);
        out.grad = std::move(fb.grad_fake);
        out.gen_loss = fb.loss;
        return out;
    }

    std::uint32_t id_;
    Table shard_;
    std::mutex mu_;
    std::uint32_t last_round_ = 0;
    std::vector<ColumnEncoder> encoders_;
    EncodedLayout layout_;
    GanConfig cfg_;
    Matrix encoded_;
    std::optional<GanModel> model_;
    GanOptimizers opt_;
    std::vector<std::size_t> order_;
    std::uint64_t order_epoch_ = 0, order_cycle_ = 0;
};

// ---------------------------------------------------------------------------
// Training sessions.

class Session {
public:
    virtual ~Session() = default;
    virtual RoundRecord run_round() = 0;
    virtual const GlobalSetup& setup() const = 0;
    /// Current global model; only the generator is meaningful in md mode.
    virtual const GanModel& model() const = 0;
    virtual const FederationConfig& config() const = 0;
    virtual std::size_t rounds_completed() const = 0;
};

namespace detail {

inline EpochLoss mean_loss(const std::vector<EpochLoss>& v) {
    EpochLoss m;
    for (const auto& e : v) {
        m.gen += e.gen / static_cast<double>(v.size());
        m.disc += e.disc / static_cast<double>(v.size());
    }
    return m;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Federator role for fed, vanilla and md modes.
class Federator : public Session {
public:
    Federator(Transport& transport, FederationConfig cfg) : transport_(transport), cfg_(std::move(cfg)) {
        require(cfg_.mode != Mode::Centralized, ErrorKind::Config, "centralized mode has no federator");
        require(cfg_.local_epochs > 0, ErrorKind::Config, "local_epochs must be positive");
        require(transport_.clients() > 0, ErrorKind::Config, "federation needs at least one client");
    }

    /// Collects statistics, builds encoders and weights, distributes the
    /// encoder bundle and waits until every client has built its model.
    const GlobalSetup& initialize() {
        require(!setup_, ErrorKind::Protocol, "federation already initialized");
        const std::size_t p = clients();
        std::vector<wire::Body> req(p, wire::StatsRequest{cfg_.seed, static_cast<std::uint32_t>(cfg_.max_modes)});
        std::vector<wire::StatsReport> reports;
        for (auto& m : exchange(req)) reports.push_back(wire::expect<wire::StatsReport>(m, "statistics collection"));
        setup_ = build_global(reports, cfg_);

        wire::EncoderBundle bundle{std::string(to_string(cfg_.mode)), cfg_.gan, setup_->schema, setup_->layout,
                                   setup_->encoders};
        expect_acks(exchange(std::vector<wire::Body>(p, bundle)), "encoder distribution");
        model_ = build_gan(setup_->layout, cfg_.gan);
        return *setup_;
    }

    RoundRecord run_round() override {
        require(setup_.has_value(), ErrorKind::Protocol, "federation is not initialized");
        const auto t0 = std::chrono::steady_clock::now();
        const auto before = traffic_;
        ++round_;
        RoundRecord rec = cfg_.mode == Mode::Md ? md_round() : fed_round();
        rec.round = round_;
        rec.wall_seconds = detail::seconds_since(t0);
        rec.bytes_sent = traffic_.bytes_to_clients - before.bytes_to_clients;
        rec.bytes_received = traffic_.bytes_from_clients - before.bytes_from_clients;
        const double compute_steps = static_cast<double>(cfg_.mode == Mode::Md ? 2 * rec.steps : rec.steps);
        rec.modeled_seconds = compute_steps * cfg_.cost.step_seconds +
                              static_cast<double>(rec.bytes_sent + rec.bytes_received) / cfg_.cost.bytes_per_second;
        rec.loss = detail::mean_loss(rec.client_losses);
        return rec;
    }

    void shutdown() {
        expect_acks(exchange(std::vector<wire::Body>(clients(), wire::Shutdown{})), "shutdown");
    }

    const GlobalSetup& setup() const override { return *setup_; }
    const GanModel& model() const override { return *model_; }
    const FederationConfig& config() const override { return cfg_; }
    std::size_t rounds_completed() const override { return round_; }
    std::size_t clients() const { return transport_.clients(); }
    /// Federator-side tally of every frame sent and received.
    const TrafficCounters& traffic() const { return traffic_; }

private:
    RoundRecord fed_round() {
        const std::size_t p = clients();
        const wire::TrainOrder order{static_cast<std::uint32_t>(cfg_.local_epochs),
                                     static_cast<std::uint64_t>(round_ - 1) * cfg_.local_epochs};
        const auto replies = exchange(std::vector<wire::Body>(p, order));
        RoundRecord rec;
        std::vector<const nn::ModelParams*> gens, discs;
        for (std::size_t i = 0; i < p; ++i) {
            const auto& up = wire::expect<wire::ModelUpload>(replies[i], "training");
            require(up.client_id == i, ErrorKind::Protocol, "upload from the wrong client");
            gens.push_back(&up.gen);
            discs.push_back(&up.disc);
            rec.client_losses.push_back({up.gen_loss, up.disc_loss});
            rec.steps = std::max(rec.steps, up.steps);
        }
        model_->gen = weighted_average(gens, setup_->weights);
        model_->disc = weighted_average(discs, setup_->weights);
        expect_acks(exchange(std::vector<wire::Body>(p, wire::ModelBroadcast{model_->gen, model_->disc})),
                    "model broadcast");
        return rec;
    }

    RoundRecord md_round() {
        const std::size_t p = clients();
        const std::uint64_t epoch = round_ - 1;
        std::size_t steps = 0;
        for (auto n : setup_->counts) steps = std::max<std::size_t>(steps, n / cfg_.gan.batch_size);

        RoundRecord rec;
        rec.client_losses.assign(p, {});
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<nn::ForwardResult> fakes;
            std::vector<wire::Body> req;
            for (std::size_t i = 0; i < p; ++i) {
                fakes.push_back(generate_fakes(*model_, cfg_.gan, {i, epoch, s}));
                req.push_back(wire::FakeBatch{epoch, s, fakes.back().output});
            }
            const auto replies = exchange(req);
            std::vector<const nn::Tape*> tapes;
            std::vector<const Matrix*> grads;
            for (std::size_t i = 0; i < p; ++i) {
                const auto& fb = wire::expect<wire::DiscFeedback>(replies[i], "discriminator feedback");
                require(fb.client_id == i && fb.grad.rows() == fakes[i].output.rows() &&
                            fb.grad.cols() == fakes[i].output.cols(),
                        ErrorKind::Protocol, "malformed feedback from client " + std::to_string(i));
                tapes.push_back(&fakes[i].tape);
                grads.push_back(&fb.grad);
                rec.client_losses[i].gen += fb.gen_loss;
                rec.client_losses[i].disc += fb.disc_loss;
            }
            generator_update(*model_, gen_opt_, tapes, grads, cfg_.gan);
        }
        for (auto& l : rec.client_losses) {
            l.gen /= static_cast<double>(steps);
            l.disc /= static_cast<double>(steps);
        }
        rec.steps = steps;

        if (cfg_.swap_interval > 0 && p > 1 && (epoch + 1) % cfg_.swap_interval == 0) swap_discriminators(epoch);
        return rec;
    }

    void swap_discriminators(std::uint64_t epoch) {
        const std::size_t p = clients();
        std::vector<std::uint32_t> perm(p);
        std::iota(perm.begin(), perm.end(), 0u);
        Rng rng = make_rng(cfg_.seed, Stream::Swap, {epoch});
        std::shuffle(perm.begin(), perm.end(), rng);

        const auto uploads = exchange(std::vector<wire::Body>(p, wire::SwapOrder{perm}));
        std::vector<nn::ModelParams> discs;
        for (std::size_t i = 0; i < p; ++i)
            discs.push_back(wire::expect<wire::ModelUpload>(uploads[i], "discriminator swap").disc);
        std::vector<wire::Body> req;
        for (std::size_t i = 0; i < p; ++i) req.push_back(wire::ModelBroadcast{{}, discs[perm[i]]});
        expect_acks(exchange(req), "discriminator swap");
    }

    void expect_acks(const std::vector<wire::Message>& replies, std::string_view context) {
        for (std::size_t i = 0; i < replies.size(); ++i)
            require(wire::expect<wire::Ack>(replies[i], context).client_id == i, ErrorKind::Protocol,
                    "acknowledgement from the wrong client");
    }

    /// Sends one message to every client and waits for all replies. Replies
    /// are returned by client id, whatever order they arrive in.
    std::vector<wire::Message> exchange(const std::vector<wire::Body>& bodies) {
        const std::size_t p = clients();
        std::vector<std::future<wire::Bytes>> pending;
        for (std::size_t i = 0; i < p; ++i) {
            auto frame = wire::encode({static_cast<std::uint32_t>(round_), bodies[i]});
            count(frame, true);
            pending.push_back(transport_.call(i, std::move(frame)));
        }
        const auto deadline = std::chrono::steady_clock::now() + cfg_.timeout;
        std::vector<wire::Message> replies(p);
        for (std::size_t i = 0; i < p; ++i) {
            require(pending[i].wait_until(deadline) != std::future_status::timeout, ErrorKind::Timeout,
                    "client " + std::to_string(i) + " did not reply within " + std::to_string(cfg_.timeout.count()) +
                        " ms");
            wire::Bytes frame;
            try {
                frame = pending[i].get();
            } catch (const std::exception& e) {
                throw Error(ErrorKind::ClientFailure, "client " + std::to_string(i) + ": " + e.what());
            }
            count(frame, false);
            replies[i] = wire::decode(frame);
        }
        return replies;
    }

    void count(const wire::Bytes& frame, bool outbound) {
        (outbound ? traffic_.bytes_to_clients : traffic_.bytes_from_clients) += frame.size();
        ++traffic_.messages;
        const auto tag = wire::frame_tag(frame);
        traffic_.bytes_by_tag[tag] += frame.size();
        ++traffic_.messages_by_tag[tag];
    }

    Transport& transport_;
    FederationConfig cfg_;
    std::optional<GlobalSetup> setup_;
    std::optional<GanModel> model_;
    nn::AdamState gen_opt_;
    std::size_t round_ = 0;
    TrafficCounters traffic_;
};

/// Single-table training with no messaging. Encoders come from the same
/// statistics path a one-client federation uses.
class CentralizedSession : public Session {
public:
    CentralizedSession(Table table, FederationConfig cfg) : table_(std::move(table)), cfg_(std::move(cfg)) {
        cfg_.mode = Mode::Centralized;
        require(cfg_.local_epochs > 0, ErrorKind::Config, "local_epochs must be positive");
        const std::vector<wire::StatsReport> reports{local_statistics(table_, 0, cfg_.seed, cfg_.max_modes)};
        setup_ = build_global(reports, cfg_);
        encoded_ = encode_table(table_, setup_.layout, setup_.encoders);
        model_ = build_gan(setup_.layout, cfg_.gan);
    }

    RoundRecord run_round() override {
        const auto t0 = std::chrono::steady_clock::now();
        ++round_;
        const auto log = train_local(model_, opt_, encoded_, cfg_.local_epochs, cfg_.gan, 0,
                                     static_cast<std::uint64_t>(round_ - 1) * cfg_.local_epochs);
        RoundRecord rec;
        rec.round = round_;
        rec.steps = cfg_.local_epochs * (table_.rows() / cfg_.gan.batch_size);
        rec.client_losses.push_back(detail::mean_loss(log));
        rec.loss = rec.client_losses[0];
        rec.wall_seconds = detail::seconds_since(t0);
        rec.modeled_seconds = static_cast<double>(rec.steps) * cfg_.cost.step_seconds;
        return rec;
    }

    const GlobalSetup& setup() const override { return setup_; }
    const GanModel& model() const override { return model_; }
    const FederationConfig& config() const override { return cfg_; }
    std::size_t rounds_completed() const override { return round_; }

private:
    Table table_;
    FederationConfig cfg_;
    GlobalSetup setup_;
    Matrix encoded_;
    GanModel model_;
    GanOptimizers opt_;
    std::size_t round_ = 0;
};

/// Hook invoked once before training (record == nullptr) and after every round.
using RoundHook = std::function<void(const RoundRecord*, Session&)>;

inline std::vector<RoundRecord> run_training(Session& session, std::size_t rounds, const RoundHook& hook = {}) {
    std::vector<RoundRecord> records;
    if (hook) hook(nullptr, session);
    for (std::size_t r = 0; r < rounds; ++r) {
        records.push_back(session.run_round());
        if (hook) hook(&records.back(), session);
    }
    return records;
}

}  // namespace fedtgan
