// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "fedtgan/app.hpp"
#include "oracles.hpp"

using namespace fedtgan;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double median3(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// ---------------------------------------------------------------------------
// 1. Metric oracles.

constexpr int kMetricTrials = 200;
constexpr std::size_t kMaxSupport = 6;
constexpr double kMetricTol = 1e-12;
constexpr double kMetricBudgetS = 1.0;

Verdict metric_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_jsd = 0.0, worst_match = 0.0, worst_cdf = 0.0;
    for (int t = 0; t < kMetricTrials; ++t) {
        const std::size_t k = 1 + rng() % kMaxSupport;
        std::vector<double> p(k), q(k);
        for (std::size_t i = 0; i < k; ++i) {
            p[i] = rng() % 4 == 0 ? 0.0 : unit(rng);
            q[i] = rng() % 4 == 0 ? 0.0 : unit(rng);
        }
        p[rng() % k] += 0.5;
        q[rng() % k] += 0.5;
        const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
        for (auto& v : p) v /= sp;
        for (auto& v : q) v /= sq;
        worst_jsd = std::max(worst_jsd, std::abs(jsd(p, q) - oracle::jsd_entropy(p, q)));
    }
    for (int t = 0; t < kMetricTrials; ++t) {
        const std::size_t n = 1 + rng() % kMaxSupport;
        std::vector<double> u(n), v(n);
        for (auto& x : u) x = std::round(20.0 * unit(rng) - 10.0) / 2.0;
        for (auto& x : v) x = 10.0 * unit(rng) - 5.0;
        const double w = wd_empirical(u, v);
        worst_match = std::max(worst_match, std::abs(w - oracle::wd_exhaustive_matching(u, v)));
        worst_cdf = std::max(worst_cdf, std::abs(w - oracle::wd_cdf_integral(u, v)));
    }
    const double elapsed = seconds_since(t0);
    return {worst_jsd <= kMetricTol && worst_match <= kMetricTol && worst_cdf <= kMetricTol &&
                elapsed < kMetricBudgetS,
            "max |jsd-oracle| " + fmt(worst_jsd) + ", max |wd-matching| " + fmt(worst_match) + ", max |wd-cdf| " +
                fmt(worst_cdf) + ", " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Weight pipeline.

constexpr int kWeightTrials = 500;
constexpr double kSumTol = 1e-9;
constexpr double kScaleTol = 1e-12;
constexpr double kSymmetryTol = 1e-9;
constexpr double kWeightBudgetS = 5.0;

Verdict weight_pipeline() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_col = 0.0, worst_ss = 0.0, worst_simplex = 0.0, worst_scale = 0.0;
    bool nonnegative = true;
    for (int t = 0; t < kWeightTrials; ++t) {
        const std::size_t p = 1 + rng() % 8, q = 1 + rng() % 6;
        DivergenceMatrix s;
        s.entries = Matrix(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
        for (Eigen::Index k = 0; k < s.entries.size(); ++k)
            s.entries.data()[k] = rng() % 5 == 0 ? 0.0 : unit(rng);
        std::vector<std::uint64_t> n(p), scaled(p);
        const std::uint64_t factor = 1 + rng() % 9;
        for (std::size_t i = 0; i < p; ++i) {
            n[i] = 1 + rng() % 5000;
            scaled[i] = n[i] * factor;
        }
        const auto tr = client_weights(s, n);
        for (Eigen::Index j = 0; j < tr.normalized.cols(); ++j)
            worst_col = std::max(worst_col, std::abs(tr.normalized.col(j).sum() - 1.0));
        worst_ss = std::max(worst_ss, std::abs(std::accumulate(tr.row_sums.begin(), tr.row_sums.end(), 0.0) -
                                               static_cast<double>(q)));
        worst_simplex = std::max(worst_simplex, std::abs(std::accumulate(tr.weights.begin(), tr.weights.end(), 0.0) - 1.0));
        for (double w : tr.weights) nonnegative &= w >= 0.0;
        const auto ts = client_weights(s, scaled);
        for (std::size_t i = 0; i < p; ++i) worst_scale = std::max(worst_scale, std::abs(ts.weights[i] - tr.weights[i]));
    }

    // Identical clients through the whole statistics pipeline.
    double worst_sym = 0.0;
    const Table table = make_mixed_table(1000, 7);
    FederationConfig cfg;
    cfg.gan.batch_size = 100;
    cfg.divergence_samples = 2000;
    for (std::size_t p : {2u, 3u, 5u}) {
        std::vector<wire::StatsReport> reports;
        for (std::size_t i = 0; i < p; ++i)
            reports.push_back(local_statistics(table, static_cast<std::uint32_t>(i), cfg.seed, cfg.max_modes));
        for (double w : build_global(reports, cfg).weights)
            worst_sym = std::max(worst_sym, std::abs(w - 1.0 / static_cast<double>(p)));
    }
    const double elapsed = seconds_since(t0);
    return {worst_col <= kSumTol && worst_ss <= kSumTol && worst_simplex <= kSumTol && nonnegative &&
                worst_scale <= kScaleTol && worst_sym <= kSymmetryTol && elapsed < kWeightBudgetS,
            "col-sum err " + fmt(worst_col) + ", sum SS err " + fmt(worst_ss) + ", simplex err " + fmt(worst_simplex) +
                ", scale err " + fmt(worst_scale) + ", symmetry err " + fmt(worst_sym) + ", " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// 3 and 7. Ablation fixture: 4 IID clients and one repeated-row client.

constexpr std::size_t kAblationIidRows = 1000;
constexpr std::size_t kAblationRepeatedRows = 4000;
constexpr std::uint64_t kAblationSeed = 31;

app::RunConfig ablation_config(Mode mode, std::uint64_t seed) {
    app::RunConfig c;
    c.dataset.fixture_rows = 8000;
    c.dataset.fixture_seed = kAblationSeed;
    c.scenario = {ScenarioMode::RepeatedRowAblation,
                  5,
                  {kAblationIidRows, kAblationIidRows, kAblationIidRows, kAblationIidRows, kAblationRepeatedRows},
                  kAblationSeed};
    c.scenario_seed_set = true;
    c.federation.mode = mode;
    c.federation.gan.noise_dim = 32;
    c.federation.gan.gen_hidden = {64, 64};
    c.federation.gan.disc_hidden = {64, 64};
    c.federation.gan.batch_size = 100;
    c.rounds = 150;
    c.eval_stride = c.rounds;
    c.set_seed(seed);
    return c;
}

/// Weights recomputed from the raw shards: categorical divergences from
/// token frequencies, continuous divergences as transmitted, then the
/// normalize / row-sum / fuse / softmax chain written out longhand.
std::vector<double> scripted_weights(const std::vector<Table>& shards, const GlobalSetup& setup) {
    const std::size_t p = shards.size(), q = setup.schema.size();
    std::vector<std::vector<double>> s(p, std::vector<double>(q));
    for (std::size_t j = 0; j < q; ++j) {
        if (setup.schema[j].kind == ColumnKind::Categorical) {
            std::map<std::string, double> global;
            double total = 0.0;
            for (const auto& sh : shards)
                for (const auto& v : sh.categorical(j)) {
                    global[v] += 1.0;
                    total += 1.0;
                }
            for (std::size_t i = 0; i < p; ++i) {
                std::map<std::string, double> local;
                for (const auto& v : shards[i].categorical(j)) local[v] += 1.0;
                std::vector<double> a, b;
                for (const auto& [tok, c] : global) {
                    a.push_back(local[tok] / static_cast<double>(shards[i].rows()));
                    b.push_back(c / total);
                }
                s[i][j] = oracle::jsd_entropy(a, b);
            }
        } else {
            for (std::size_t i = 0; i < p; ++i)
                s[i][j] = setup.divergence.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    std::vector<double> ss(p, 0.0);
    for (std::size_t j = 0; j < q; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < p; ++i) col += s[i][j];
        for (std::size_t i = 0; i < p; ++i) ss[i] += col == 0.0 ? 1.0 / static_cast<double>(p) : s[i][j] / col;
    }
    double ss_total = 0.0, n_total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        ss_total += ss[i];
        n_total += static_cast<double>(shards[i].rows());
    }
    std::vector<double> sd(p), w(p);
    double z = 0.0;
    for (std::size_t i = 0; i < p; ++i) sd[i] = static_cast<double>(shards[i].rows()) / n_total * (1.0 - ss[i] / ss_total);
    const double top = *std::max_element(sd.begin(), sd.end());
    for (std::size_t i = 0; i < p; ++i) z += w[i] = std::exp(sd[i] - top);
    for (auto& v : w) v /= z;
    return w;
}

constexpr double kScriptedTol = 1e-9;

Verdict ablation_weights() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = ablation_config(Mode::Fed, kAblationSeed);
    const auto data = app::prepare(cfg);
    std::vector<wire::StatsReport> reports;
    for (std::size_t i = 0; i < data.shards.size(); ++i)
        reports.push_back(local_statistics(data.shards[i], static_cast<std::uint32_t>(i), cfg.federation.seed,
                                           cfg.federation.max_modes));
    const auto setup = build_global(reports, cfg.federation);
    const auto again = build_global(reports, cfg.federation);
    const auto scripted = scripted_weights(data.shards, setup);

    double worst = 0.0;
    for (std::size_t i = 0; i < scripted.size(); ++i) worst = std::max(worst, std::abs(scripted[i] - setup.weights[i]));
    const auto& w = setup.weights;
    const std::size_t last = w.size() - 1;
    bool strict_min = true;
    for (std::size_t i = 0; i < last; ++i) strict_min &= w[last] < w[i];
    std::string ws;
    for (double v : w) ws += (ws.empty() ? "" : " ") + fmt(v);
    std::string ss;
    for (double v : setup.trace.row_sums) ss += (ss.empty() ? "" : " ") + fmt(v);
    return {strict_min && worst <= kScriptedTol && again.weights == w,
            "W = [" + ws + "], SS = [" + ss + "], repeated-row client " + (strict_min ? "is" : "is NOT") +
                " the strict minimum; scripted-oracle err " + fmt(worst) + ", " + fmt(seconds_since(t0)) + " s"};
}

constexpr int kMedianSeeds = 3;

Verdict weighted_vs_uniform() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> fed, vanilla;
    const auto dir = fs::temp_directory_path() / "fedtgan_acceptance_c7";
    for (int s = 0; s < kMedianSeeds; ++s) {
        const std::uint64_t seed = 100 + static_cast<std::uint64_t>(s);
        fed.push_back(*app::cmd_run(ablation_config(Mode::Fed, seed), dir / ("fed" + std::to_string(s))).final_score.avg_jsd);
        vanilla.push_back(
            *app::cmd_run(ablation_config(Mode::Vanilla, seed), dir / ("vanilla" + std::to_string(s))).final_score.avg_jsd);
    }
    const double f = median3(fed), v = median3(vanilla);
    return {f <= v, "median Avg-JSD fed " + fmt(f) + " vs vanilla " + fmt(v) + " (fed runs " + fmt(fed[0]) + " " +
                        fmt(fed[1]) + " " + fmt(fed[2]) + "; vanilla " + fmt(vanilla[0]) + " " + fmt(vanilla[1]) + " " +
                        fmt(vanilla[2]) + "), " + fmt(seconds_since(t0)) + " s"};
}

// ---------------------------------------------------------------------------
// 4. GMM recovery.

constexpr std::size_t kGmmDraws = 5000;
constexpr double kMeanTol = 0.2;
constexpr double kWeightTol = 0.05;
constexpr double kGmmBudgetS = 10.0;

Verdict gmm_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(404);
    std::bernoulli_distribution pick_low(0.35);
    std::normal_distribution<double> low(-3.0, 1.0), high(6.0, 1.5);
    std::vector<double> x(kGmmDraws);
    for (auto& v : x) v = pick_low(rng) ? low(rng) : high(rng);
    const auto g = fit_gmm(x, kDefaultMaxModes, 1);
    bool ok = g.modes() == 2;
    std::string found;
    if (ok) {
        const std::size_t lo = g.means[0] < g.means[1] ? 0 : 1, hi = 1 - lo;
        ok = std::abs(g.means[lo] + 3.0) <= kMeanTol && std::abs(g.means[hi] - 6.0) <= kMeanTol &&
             std::abs(g.weights[lo] - 0.35) <= kWeightTol && std::abs(g.weights[hi] - 0.65) <= kWeightTol;
        found = "means " + fmt(g.means[lo]) + "/" + fmt(g.means[hi]) + " weights " + fmt(g.weights[lo]) + "/" +
                fmt(g.weights[hi]);
    }
    std::vector<double> a(2000), b(2000);
    std::normal_distribution<double> na(-20.0, 1.0), nb(20.0, 1.0);
    for (auto& v : a) v = na(rng);
    for (auto& v : b) v = nb(rng);
    const std::vector<LocalMixture> locals{{fit_gmm(a, kDefaultMaxModes, 2), a.size()},
                                           {fit_gmm(b, kDefaultMaxModes, 3), b.size()}};
    const auto agg = aggregate_gmm(locals, kDefaultMaxModes, 4);
    const double elapsed = seconds_since(t0);
    return {ok && agg.modes() >= 2 && elapsed < kGmmBudgetS,
            "fit: " + std::to_string(g.modes()) + " modes, " + found + "; disjoint aggregate: " +
                std::to_string(agg.modes()) + " modes, " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// 5. Gradients.

constexpr int kGradSpecs = 20;
constexpr double kGradTol = 1e-4;
constexpr double kGradBudgetS = 30.0;

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    const double scale = std::max(std::sqrt(na), std::sqrt(nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

Verdict gradients() {
    using namespace fedtgan::nn;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(505);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Activation acts[] = {Activation::Relu, Activation::LeakyRelu, Activation::Tanh, Activation::Identity};
    const OutputActivation outs[] = {OutputActivation::Identity, OutputActivation::Tanh, OutputActivation::Softmax,
                                     OutputActivation::GumbelSoftmax};
    double worst = 0.0;
    for (int t = 0; t < kGradSpecs; ++t) {
        NetSpec spec;
        spec.input_width = 1 + rng() % 6;
        for (std::size_t l = 0, d = rng() % 3; l < d; ++l) spec.hidden.push_back({1 + rng() % 7, acts[rng() % 4]});
        for (std::size_t s = 0, n = 1 + rng() % 3; s < n; ++s)
            spec.output.push_back({1 + rng() % 4, outs[rng() % 4], 0.2 + 0.1 * static_cast<double>(rng() % 8)});
        auto params = init_params(spec, rng());
        for (auto& v : params.flat) v += 0.1 * normal(rng);
        Matrix batch(5, static_cast<Eigen::Index>(spec.input_width)), dir(5, static_cast<Eigen::Index>(spec.output_width()));
        for (Eigen::Index k = 0; k < batch.size(); ++k) batch.data()[k] = normal(rng);
        for (Eigen::Index k = 0; k < dir.size(); ++k) dir.data()[k] = normal(rng);
        const ForwardOptions opts{true, rng()};
        const auto fwd = forward(params, spec, batch, opts);
        const auto g = backward(params, spec, fwd.tape, dir);
        auto loss = [&](const std::vector<double>& flat) {
            ModelParams p = params;
            p.flat = flat;
            return (forward(p, spec, batch, opts).output.array() * dir.array()).sum();
        };
        worst = std::max(worst, relative_error(g.params, oracle::finite_difference(loss, params.flat)));
    }
    const double elapsed = seconds_since(t0);
    return {worst <= kGradTol && elapsed < kGradBudgetS,
            "max relative error " + fmt(worst) + " over " + std::to_string(kGradSpecs) + " specs, " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// 6. Desk-scale convergence.

constexpr double kConvergenceJsd = 0.1;
constexpr double kConvergenceWd = 0.05;
constexpr double kConvergenceBudgetS = 600.0;

app::RunConfig convergence_config(std::uint64_t seed) {
    app::RunConfig c;
    c.dataset.fixture_rows = 5000;
    c.dataset.fixture_seed = 1;
    c.scenario = {ScenarioMode::FullCopy, 3, {}, 0};
    c.federation.mode = Mode::Fed;
    c.federation.gan.noise_dim = 32;
    c.federation.gan.gen_hidden = {64, 64};
    c.federation.gan.disc_hidden = {64, 64};
    c.federation.gan.batch_size = 100;
    c.federation.gan.lr = 1e-3;
    c.federation.local_epochs = 1;
    c.rounds = 300;
    c.eval_stride = c.rounds;
    c.set_seed(seed);
    return c;
}

Verdict convergence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> jsds, wds;
    const auto dir = fs::temp_directory_path() / "fedtgan_acceptance_c6";
    for (int s = 0; s < kMedianSeeds; ++s) {
        const auto r = app::cmd_run(convergence_config(1 + static_cast<std::uint64_t>(s)), dir / std::to_string(s));
        jsds.push_back(*r.final_score.avg_jsd);
        wds.push_back(*r.final_score.avg_wd);
    }
    const double jsd_med = median3(jsds), wd_med = median3(wds), elapsed = seconds_since(t0);
    return {jsd_med <= kConvergenceJsd && wd_med <= kConvergenceWd && elapsed <= kConvergenceBudgetS,
            "median Avg-JSD " + fmt(jsd_med) + " (runs " + fmt(jsds[0]) + " " + fmt(jsds[1]) + " " + fmt(jsds[2]) +
                "), median Avg-WD " + fmt(wd_med) + " (runs " + fmt(wds[0]) + " " + fmt(wds[1]) + " " + fmt(wds[2]) +
                "), " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// 8. Communication accounting.

FederationConfig comm_config(Mode mode, std::size_t hidden) {
    FederationConfig cfg;
    cfg.mode = mode;
    cfg.gan.noise_dim = 16;
    cfg.gan.gen_hidden = {hidden};
    cfg.gan.disc_hidden = {hidden};
    cfg.gan.batch_size = 50;
    cfg.swap_interval = 0;
    cfg.divergence_samples = 1000;
    return cfg;
}

/// Categorical-only shards: the encoded layout does not depend on shard size.
std::vector<Table> categorical_shards(std::size_t rows_per_client, std::size_t columns) {
    const Table mixed = make_mixed_table(4 * rows_per_client, 8);
    std::vector<ColumnMeta> schema;
    std::vector<ColumnData> cols;
    for (std::size_t j = 0; j < columns; ++j) {
        schema.push_back({mixed.meta(j).name, ColumnKind::Categorical, j});
        cols.push_back(mixed.column(j));
    }
    const Table t(schema, cols);
    return partition(t, {ScenarioMode::ImbalancedIid, 2, {rows_per_client, rows_per_client}, 3});
}

struct Traffic {
    std::uint64_t sent = 0, received = 0;
    std::map<wire::Tag, std::uint64_t> by_tag;
    std::size_t width = 0, steps = 0, gen_size = 0, disc_size = 0, params = 0, manifest = 0;
    bool records_agree = false;  // federator's own tally matches the transport's
};

Traffic one_round(const std::vector<Table>& shards, const FederationConfig& cfg) {
    std::vector<std::unique_ptr<ClientNode>> nodes;
    std::vector<Endpoint*> eps;
    for (std::size_t i = 0; i < shards.size(); ++i) {
        nodes.push_back(std::make_unique<ClientNode>(static_cast<std::uint32_t>(i), shards[i]));
        eps.push_back(nodes.back().get());
    }
    InProcTransport inner(eps);
    CountingTransport counting(inner);
    Federator fed(counting, cfg);
    fed.initialize();
    const auto before = counting.counters();
    const auto rec = fed.run_round();
    const auto after = counting.counters();
    Traffic t;
    t.sent = after.bytes_to_clients - before.bytes_to_clients;
    t.received = after.bytes_from_clients - before.bytes_from_clients;
    for (const auto& [tag, b] : after.bytes_by_tag) {
        const auto it = before.bytes_by_tag.find(tag);
        t.by_tag[tag] = b - (it == before.bytes_by_tag.end() ? 0 : it->second);
    }
    t.width = fed.setup().layout.width;
    t.steps = rec.steps;
    t.gen_size = wire::encoded_size(fed.model().gen);
    t.disc_size = wire::encoded_size(fed.model().disc);
    t.params = fed.model().gen.size() + fed.model().disc.size();
    t.manifest = wire::manifest_json(fed.model().gen).size() + wire::manifest_json(fed.model().disc).size();
    fed.shutdown();
    t.records_agree = rec.bytes_sent == t.sent && rec.bytes_received == t.received;
    return t;
}

Verdict communication() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::ostringstream notes;
    const std::size_t p = 2;

    // fed: fixed per-round size, independent of shard size.
    const auto small = one_round(categorical_shards(100, 2), comm_config(Mode::Fed, 32));
    const auto large = one_round(categorical_shards(300, 2), comm_config(Mode::Fed, 32));
    ok &= small.records_agree && large.records_agree;
    ok &= small.width == large.width && small.sent == large.sent && small.received == large.received;
    notes << "fed bytes/round " << small.sent + small.received << " at 100 rows/client and "
          << large.sent + large.received << " at 300";
    // Exact arithmetic: TrainOrder + ModelBroadcast out, ModelUpload + Ack back.
    const std::uint64_t model = small.gen_size + small.disc_size;
    const std::uint64_t expect_sent = p * ((wire::kFrameHeader + 4 + 8) + (wire::kFrameHeader + model));
    const std::uint64_t expect_recv = p * ((wire::kFrameHeader + 4 + model + 8 + 8 + 8) + (wire::kFrameHeader + 4));
    ok &= small.sent == expect_sent && small.received == expect_recv;

    // fed: linear in parameter count once the layer manifests (two copies of
    // each model per client and round) are set aside.
    std::vector<Traffic> sizes;
    for (std::size_t h : {16u, 32u, 64u}) sizes.push_back(one_round(categorical_shards(100, 2), comm_config(Mode::Fed, h)));
    const auto total = [&](const Traffic& t) { return static_cast<double>(t.sent + t.received - 2 * p * t.manifest); };
    const double slope1 = (total(sizes[1]) - total(sizes[0])) / static_cast<double>(sizes[1].params - sizes[0].params);
    const double slope2 = (total(sizes[2]) - total(sizes[1])) / static_cast<double>(sizes[2].params - sizes[1].params);
    ok &= slope1 == slope2 && slope1 == static_cast<double>(2 * p * 8);
    notes << "; fed bytes per parameter " << slope1 << " and " << slope2;

    // md: FakeBatch + DiscFeedback traffic per epoch is steps * P * frame(B, W_enc).
    const auto md_frames = [&](const Traffic& t, std::size_t batch) {
        const std::uint64_t cells = batch * t.width * 8;
        const std::uint64_t fake = wire::kFrameHeader + 8 + 8 + 4 + 4 + cells;
        const std::uint64_t feedback = wire::kFrameHeader + 4 + 4 + 4 + cells + 8 + 8;
        return t.steps * p * (fake + feedback);
    };
    const auto md_bytes = [](const Traffic& t) {
        return t.by_tag.at(wire::Tag::FakeBatch) + t.by_tag.at(wire::Tag::DiscFeedback);
    };
    const auto m1 = one_round(categorical_shards(100, 2), comm_config(Mode::Md, 32));
    const auto m2 = one_round(categorical_shards(200, 2), comm_config(Mode::Md, 32));
    const auto m3 = one_round(categorical_shards(100, 1), comm_config(Mode::Md, 32));
    ok &= md_bytes(m1) == md_frames(m1, 50) && md_bytes(m2) == md_frames(m2, 50) && md_bytes(m3) == md_frames(m3, 50);
    ok &= m2.steps == 2 * m1.steps && md_bytes(m2) == 2 * md_bytes(m1);
    ok &= m3.width < m1.width && m3.steps == m1.steps;
    const std::uint64_t per_cell1 = md_bytes(m1) - md_bytes(m3);
    ok &= per_cell1 == m1.steps * p * 2 * 50 * 8 * (m1.width - m3.width);
    notes << "; md exchange bytes " << md_bytes(m1) << " (" << m1.steps << " steps, W_enc " << m1.width << "), "
          << md_bytes(m2) << " (" << m2.steps << " steps), " << md_bytes(m3) << " (W_enc " << m3.width << ")";
    notes << ", " << seconds_since(t0) << " s";
    return {ok, notes.str()};
}

// ---------------------------------------------------------------------------
// 9. Determinism and equivalences.

Verdict determinism() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::ostringstream notes;

    FederationConfig cfg = comm_config(Mode::Fed, 32);
    cfg.local_epochs = 2;
    const Table t = make_mixed_table(300, 9);
    ClientNode node(0, t);
    InProcTransport tr({&node});
    Federator fed(tr, cfg);
    fed.initialize();
    CentralizedSession central(t, cfg);
    std::size_t matching = 0;
    ok &= fed.model() == central.model();
    for (int r = 0; r < 5; ++r) {
        fed.run_round();
        central.run_round();
        if (fed.model() == central.model()) ++matching;
    }
    fed.shutdown();
    ok &= matching == 5;
    notes << "P=1 fed equals centralized after " << matching << "/5 rounds";

    app::RunConfig run;
    run.dataset.fixture_rows = 1200;
    run.scenario = {ScenarioMode::ImbalancedIid, 4, {300, 250, 200, 350}, 5};
    run.scenario_seed_set = true;
    run.federation.gan.noise_dim = 16;
    run.federation.gan.gen_hidden = {32};
    run.federation.gan.disc_hidden = {32};
    run.federation.gan.batch_size = 50;
    run.federation.divergence_samples = 2000;
    run.rounds = 4;
    run.eval_samples = 500;
    run.set_seed(77);
    const auto dir = fs::temp_directory_path() / "fedtgan_acceptance_c9";
    app::cmd_run(run, dir / "plain");
    const auto reference = oracle::read_file(dir / "plain" / "metrics.csv");
    std::size_t identical = 0;
    for (std::uint64_t jitter = 1; jitter <= 3; ++jitter) {
        const auto out = dir / ("jitter" + std::to_string(jitter));
        app::cmd_run(run, out, [jitter](std::vector<Endpoint*> eps) -> std::unique_ptr<Transport> {
            return std::make_unique<JitterTransport>(std::move(eps), jitter, std::chrono::microseconds(4000));
        });
        if (oracle::read_file(out / "metrics.csv") == reference) ++identical;
    }
    ok &= identical == 3;
    notes << "; metrics.csv byte-identical in " << identical << "/3 jittered replays, " << seconds_since(t0) << " s";
    return {ok, notes.str()};
}

// ---------------------------------------------------------------------------
// 10. Privacy.

Verdict privacy() {
    const auto t0 = std::chrono::steady_clock::now();
    bool schema_ok = true;
    for (wire::Tag tag : wire::kAllTags)
        for (const auto& f : wire::fields_of(tag)) {
            schema_ok &= f.kind != wire::FieldKind::TableCells;
            if (f.kind == wire::FieldKind::SyntheticRows) schema_ok &= tag == wire::Tag::FakeBatch;
        }

    const Table t = make_mixed_table(400, 12);
    const auto shards = partition(t, {ScenarioMode::ImbalancedIid, 3, {120, 100, 150}, 2});
    std::unordered_set<std::uint64_t> raw;
    for (const auto& s : shards)
        for (std::size_t j = 0; j < s.column_count(); ++j)
            if (s.meta(j).kind == ColumnKind::Continuous)
                for (double v : s.continuous(j)) {
                    std::uint64_t bits;
                    std::memcpy(&bits, &v, 8);
                    raw.insert(bits);
                }
    bool canary_ok = true, placement_ok = true;
    std::ostringstream notes;
    for (Mode mode : {Mode::Fed, Mode::Vanilla, Mode::Md}) {
        std::vector<std::unique_ptr<ClientNode>> nodes;
        std::vector<Endpoint*> eps;
        for (std::size_t i = 0; i < shards.size(); ++i) {
            nodes.push_back(std::make_unique<ClientNode>(static_cast<std::uint32_t>(i), shards[i]));
            eps.push_back(nodes.back().get());
        }
        InProcTransport inner(eps);
        CountingTransport counting(inner, true);
        auto cfg = comm_config(mode, 16);
        cfg.swap_interval = 1;
        Federator fed(counting, cfg);
        fed.initialize();
        fed.run_round();
        fed.run_round();
        fed.shutdown();
        std::size_t fake = 0;
        for (const auto& frame : counting.frames()) {
            if (wire::frame_tag(frame) == wire::Tag::FakeBatch) {
                ++fake;
                continue;
            }
            for (std::size_t k = 0; k + 8 <= frame.size(); ++k) {
                std::uint64_t bits;
                std::memcpy(&bits, frame.data() + k, 8);
                canary_ok &= raw.count(bits) == 0;
            }
        }
        placement_ok &= (fake > 0) == (mode == Mode::Md);
        notes << to_string(mode) << " " << counting.frames().size() << " frames/" << fake << " FakeBatch; ";
    }
    return {schema_ok && canary_ok && placement_ok,
            std::string("schema ") + (schema_ok ? "clean" : "LEAKS") + ", raw-value scan " +
                (canary_ok ? "clean" : "FOUND CELLS") + ", " + notes.str() + fmt(seconds_since(t0)) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    std::set<int> only;
    for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));
    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, metric_oracles}, {2, weight_pipeline}, {3, ablation_weights}, {4, gmm_recovery},     {5, gradients},
        {6, convergence},    {7, weighted_vs_uniform}, {8, communication}, {9, determinism}, {10, privacy}};
    int failed = 0;
    for (const auto& [id, check] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    }
    std::cout << "acceptance: " << failed << " failing" << std::endl;
    return 0;
}
