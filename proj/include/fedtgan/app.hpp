#pragma once

// Experiment runner: YAML run configs, output directories and the commands
// behind the `fedtgan` executable.

#include <yaml-cpp/yaml.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "fedtgan/evaluation.hpp"
#include "fedtgan/federation.hpp"
#include "fedtgan/fixtures.hpp"
#include "fedtgan/scenario.hpp"
#include "fedtgan/tcp.hpp"

namespace fedtgan::app {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Clock { Logical, Wall };

struct DatasetConfig {
    fs::path path;  // CSV; empty means generate the mixed fixture
    std::size_t fixture_rows = 5000;
    std::uint64_t fixture_seed = 1;
    SchemaHint schema;
};

struct TransportConfig {
    bool tcp = false;
    std::string address = "127.0.0.1:7400";
    std::chrono::milliseconds connect_timeout = std::chrono::seconds(60);
};

struct RunConfig {
    DatasetConfig dataset;
    ScenarioSpec scenario;
    bool scenario_seed_set = false;
    FederationConfig federation;
    std::size_t rounds = 10;
    std::size_t eval_stride = 1;
    std::size_t eval_samples = 0;  // 0: as many rows as the real table
    TransportConfig transport;
    Clock clock = Clock::Logical;
    fs::path output = "runs/latest";
    std::uint64_t seed = 0;

    /// Applies `seed` to every stream that was not pinned separately.
    void set_seed(std::uint64_t s) {
        seed = s;
        federation.seed = s;
        federation.gan.seed = s;
        if (!scenario_seed_set) scenario.seed = s;
    }
};

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

[[noreturn]] inline void config_error(const YAML::Node& n, const std::string& msg) {
    const auto m = n.Mark();
    throw Error(ErrorKind::Config, m.is_null() ? msg : "line " + std::to_string(m.line + 1) + ": " + msg);
}

inline void allow_keys(const YAML::Node& n, const std::string& where, std::initializer_list<std::string_view> keys) {
    if (!n) return;
    if (!n.IsMap()) config_error(n, where + " must be a mapping");
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            config_error(kv.first, "unknown key '" + key + "' in " + where);
    }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& name) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        config_error(n, "'" + name + "' has the wrong type");
    }
}

template <class T>
void read(const YAML::Node& parent, const char* key, T& out) {
    if (const auto n = parent[key]) out = scalar<T>(n, key);
}

inline std::size_t positive(const YAML::Node& parent, const char* key, std::size_t fallback) {
    std::size_t v = fallback;
    read(parent, key, v);
    if (v == 0) config_error(parent[key], std::string(key) + " must be positive");
    return v;
}

inline std::string format_real(double v) { return fedtgan::detail::format_real(v); }

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root, const fs::path& base_dir = {}) {
    using detail::allow_keys;
    using detail::read;
    if (!root || !root.IsMap()) throw Error(ErrorKind::Config, "config must be a YAML mapping");
    allow_keys(root, "config",
               {"dataset", "scenario", "mode", "gan", "rounds", "local_epochs", "swap_interval", "fusion",
                "max_modes", "divergence_samples", "eval", "transport", "clock", "output", "seed", "timeout_s"});
    RunConfig c;

    if (const auto d = root["dataset"]) {
        allow_keys(d, "dataset", {"path", "fixture", "schema"});
        if (d["path"] && d["fixture"]) detail::config_error(d, "dataset takes either path or fixture");
        if (d["path"]) {
            c.dataset.path = detail::scalar<std::string>(d["path"], "path");
            if (c.dataset.path.is_relative() && !base_dir.empty()) c.dataset.path = base_dir / c.dataset.path;
        }
        if (const auto f = d["fixture"]) {
            allow_keys(f, "dataset.fixture", {"rows", "seed"});
            c.dataset.fixture_rows = detail::positive(f, "rows", c.dataset.fixture_rows);
            read(f, "seed", c.dataset.fixture_seed);
        }
        if (const auto s = d["schema"]) {
            if (!s.IsMap()) detail::config_error(s, "dataset.schema must map column names to kinds");
            for (const auto& kv : s) {
                const auto kind = detail::scalar<std::string>(kv.second, "schema");
                if (kind == "categorical")
                    c.dataset.schema[kv.first.as<std::string>()] = ColumnKind::Categorical;
                else if (kind == "continuous")
                    c.dataset.schema[kv.first.as<std::string>()] = ColumnKind::Continuous;
                else
                    detail::config_error(kv.second, "column kind must be categorical or continuous");
            }
        }
    }

    if (const auto s = root["scenario"]) {
        allow_keys(s, "scenario", {"mode", "clients", "sizes", "seed"});
        if (s["mode"]) c.scenario.mode = parse_scenario_mode(detail::scalar<std::string>(s["mode"], "scenario.mode"));
        c.scenario.client_count = detail::positive(s, "clients", 1);
        read(s, "sizes", c.scenario.sizes);
        if (s["seed"]) {
            read(s, "seed", c.scenario.seed);
            c.scenario_seed_set = true;
        }
        if (c.scenario.mode != ScenarioMode::FullCopy && c.scenario.sizes.size() != c.scenario.client_count)
            detail::config_error(s, "scenario.sizes needs one entry per client");
    }

    auto& f = c.federation;
    if (root["mode"]) f.mode = parse_mode(detail::scalar<std::string>(root["mode"], "mode"));
    if (const auto g = root["gan"]) {
        allow_keys(g, "gan",
                   {"noise_dim", "gen_hidden", "disc_hidden", "batch_size", "lr", "beta1", "beta2", "tau",
                    "real_label"});
        f.gan.noise_dim = detail::positive(g, "noise_dim", f.gan.noise_dim);
        read(g, "gen_hidden", f.gan.gen_hidden);
        read(g, "disc_hidden", f.gan.disc_hidden);
        f.gan.batch_size = detail::positive(g, "batch_size", f.gan.batch_size);
        read(g, "lr", f.gan.lr);
        read(g, "beta1", f.gan.beta1);
        read(g, "beta2", f.gan.beta2);
        read(g, "tau", f.gan.tau);
        read(g, "real_label", f.gan.real_label);
        if (!(f.gan.tau > 0.0)) detail::config_error(g, "gan.tau must be positive");
    }
    read(root, "rounds", c.rounds);
    f.local_epochs = detail::positive(root, "local_epochs", f.local_epochs);
    read(root, "swap_interval", f.swap_interval);
    if (root["fusion"]) f.fusion = parse_fusion(detail::scalar<std::string>(root["fusion"], "fusion"));
    f.max_modes = detail::positive(root, "max_modes", f.max_modes);
    f.divergence_samples = detail::positive(root, "divergence_samples", f.divergence_samples);
    if (root["timeout_s"]) f.timeout = std::chrono::milliseconds(
                               static_cast<long long>(1000 * detail::scalar<double>(root["timeout_s"], "timeout_s")));

    if (const auto e = root["eval"]) {
        allow_keys(e, "eval", {"stride", "samples"});
        c.eval_stride = detail::positive(e, "stride", c.eval_stride);
        read(e, "samples", c.eval_samples);
    }
    if (const auto t = root["transport"]) {
        allow_keys(t, "transport", {"kind", "address", "connect_timeout_s"});
        const auto kind = t["kind"] ? detail::scalar<std::string>(t["kind"], "transport.kind") : "inproc";
        if (kind != "inproc" && kind != "tcp") detail::config_error(t["kind"], "transport.kind must be inproc or tcp");
        c.transport.tcp = kind == "tcp";
        read(t, "address", c.transport.address);
        if (t["connect_timeout_s"])
            c.transport.connect_timeout = std::chrono::milliseconds(
                static_cast<long long>(1000 * detail::scalar<double>(t["connect_timeout_s"], "connect_timeout_s")));
    }
    if (const auto k = root["clock"]) {
        const auto s = detail::scalar<std::string>(k, "clock");
        if (s != "logical" && s != "wall") detail::config_error(k, "clock must be logical or wall");
        c.clock = s == "wall" ? Clock::Wall : Clock::Logical;
    }
    if (root["output"]) c.output = detail::scalar<std::string>(root["output"], "output");
    std::uint64_t seed = 0;
    read(root, "seed", seed);
    c.set_seed(seed);
    return c;
}

inline RunConfig load_config(const fs::path& path) {
    require(fs::exists(path), ErrorKind::MissingFile, "config " + path.string() + " does not exist");
    try {
        return parse_config(YAML::LoadFile(path.string()), path.parent_path());
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
}

/// Effective config as YAML, with every default spelled out. Loading it
/// back yields the same experiment.
inline std::string to_yaml(const RunConfig& c) {
    const auto& f = c.federation;
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
    if (c.dataset.path.empty()) {
        out << YAML::Key << "fixture" << YAML::Value << YAML::BeginMap << YAML::Key << "rows" << YAML::Value
            << c.dataset.fixture_rows << YAML::Key << "seed" << YAML::Value << c.dataset.fixture_seed << YAML::EndMap;
    } else {
        out << YAML::Key << "path" << YAML::Value << fs::absolute(c.dataset.path).lexically_normal().string();
    }
    if (!c.dataset.schema.empty()) {
        out << YAML::Key << "schema" << YAML::Value << YAML::BeginMap;
        for (const auto& [name, kind] : c.dataset.schema)
            out << YAML::Key << name << YAML::Value << std::string(to_string(kind));
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    out << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap << YAML::Key << "mode" << YAML::Value
        << std::string(to_string(c.scenario.mode)) << YAML::Key << "clients" << YAML::Value << c.scenario.client_count;
    if (!c.scenario.sizes.empty()) out << YAML::Key << "sizes" << YAML::Value << YAML::Flow << c.scenario.sizes;
    out << YAML::Key << "seed" << YAML::Value << c.scenario.seed << YAML::EndMap;
    out << YAML::Key << "mode" << YAML::Value << std::string(to_string(f.mode));
    out << YAML::Key << "gan" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "noise_dim" << YAML::Value << f.gan.noise_dim;
    out << YAML::Key << "gen_hidden" << YAML::Value << YAML::Flow << f.gan.gen_hidden;
    out << YAML::Key << "disc_hidden" << YAML::Value << YAML::Flow << f.gan.disc_hidden;
    out << YAML::Key << "batch_size" << YAML::Value << f.gan.batch_size;
    out << YAML::Key << "lr" << YAML::Value << detail::format_real(f.gan.lr);
    out << YAML::Key << "beta1" << YAML::Value << detail::format_real(f.gan.beta1);
    out << YAML::Key << "beta2" << YAML::Value << detail::format_real(f.gan.beta2);
    out << YAML::Key << "tau" << YAML::Value << detail::format_real(f.gan.tau);
    out << YAML::Key << "real_label" << YAML::Value << detail::format_real(f.gan.real_label);
    out << YAML::EndMap;
    out << YAML::Key << "rounds" << YAML::Value << c.rounds;
    out << YAML::Key << "local_epochs" << YAML::Value << f.local_epochs;
    out << YAML::Key << "swap_interval" << YAML::Value << f.swap_interval;
    out << YAML::Key << "fusion" << YAML::Value << std::string(to_string(f.fusion));
    out << YAML::Key << "max_modes" << YAML::Value << f.max_modes;
    out << YAML::Key << "divergence_samples" << YAML::Value << f.divergence_samples;
    out << YAML::Key << "timeout_s" << YAML::Value << detail::format_real(static_cast<double>(f.timeout.count()) / 1000.0);
    out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap << YAML::Key << "stride" << YAML::Value << c.eval_stride
        << YAML::Key << "samples" << YAML::Value << c.eval_samples << YAML::EndMap;
    out << YAML::Key << "transport" << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value
        << (c.transport.tcp ? "tcp" : "inproc") << YAML::Key << "address" << YAML::Value << c.transport.address
        << YAML::Key << "connect_timeout_s" << YAML::Value
        << detail::format_real(static_cast<double>(c.transport.connect_timeout.count()) / 1000.0) << YAML::EndMap;
    out << YAML::Key << "clock" << YAML::Value << (c.clock == Clock::Wall ? "wall" : "logical");
    out << YAML::Key << "output" << YAML::Value << c.output.string();
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Data preparation shared by run, validate and client.

inline Table load_dataset(const DatasetConfig& d) {
    if (d.path.empty()) return make_mixed_table(d.fixture_rows, d.fixture_seed);
    return load_csv(d.path, d.schema);
}

struct Prepared {
    Table table;
    std::vector<Table> shards;
};

inline Prepared prepare(const RunConfig& c) {
    Prepared p;
    p.table = load_dataset(c.dataset);
    p.shards = partition(p.table, c.scenario);
    return p;
}

// ---------------------------------------------------------------------------
// Plan (validate).

struct Plan {
    std::size_t clients = 0;
    std::size_t columns = 0;
    std::size_t encoded_width = 0;
    std::size_t rounds = 0;
    std::size_t aggregations = 0;
    std::size_t swaps = 0;
    std::vector<std::size_t> shard_rows;
    std::size_t steps_per_round = 0;
};

inline std::string describe(const Plan& p, const RunConfig& c) {
    std::ostringstream os;
    os << "mode            " << to_string(c.federation.mode) << '\n'
       << "clients (P)     " << p.clients << '\n'
       << "columns (Q)     " << p.columns << '\n'
       << "encoded width   " << p.encoded_width << '\n'
       << "rounds          " << p.rounds << '\n'
       << "local epochs    " << c.federation.local_epochs << '\n'
       << "aggregations    " << p.aggregations << '\n'
       << "disc swaps      " << p.swaps << '\n'
       << "steps per round " << p.steps_per_round << '\n'
       << "shard rows     ";
    for (auto n : p.shard_rows) os << ' ' << n;
    os << '\n';
    return os.str();
}

/// Checks a config without training: loads and partitions the data, checks
/// every shard against the batch size and derives the encoders.
inline Plan cmd_validate(const RunConfig& c) {
    require(c.rounds > 0, ErrorKind::Config, "rounds must be positive");
    require(c.federation.gan.batch_size > 0, ErrorKind::Config, "batch_size must be positive");
    const auto data = prepare(c);
    Plan p;
    p.rounds = c.rounds;
    const bool central = c.federation.mode == Mode::Centralized;
    const std::vector<Table> pooled{data.table};
    const auto& shards = central ? pooled : data.shards;
    p.clients = shards.size();
    for (std::size_t i = 0; i < shards.size(); ++i) {
        p.shard_rows.push_back(shards[i].rows());
        require(shards[i].rows() >= c.federation.gan.batch_size, ErrorKind::ShardTooSmall,
                "client " + std::to_string(i) + " holds " + std::to_string(shards[i].rows()) +
                    " rows, fewer than batch_size " + std::to_string(c.federation.gan.batch_size));
    }
    std::vector<wire::StatsReport> reports;
    for (std::size_t i = 0; i < shards.size(); ++i)
        reports.push_back(local_statistics(shards[i], static_cast<std::uint32_t>(i), c.federation.seed,
                                           c.federation.max_modes));
    const auto setup = build_global(reports, c.federation);
    p.columns = setup.schema.size();
    p.encoded_width = setup.layout.width;
    const std::size_t max_rows = *std::max_element(p.shard_rows.begin(), p.shard_rows.end());
    switch (c.federation.mode) {
        case Mode::Fed:
        case Mode::Vanilla:
            p.aggregations = c.rounds;
            p.steps_per_round = c.federation.local_epochs * (max_rows / c.federation.gan.batch_size);
            break;
        case Mode::Centralized:
            p.steps_per_round = c.federation.local_epochs * (max_rows / c.federation.gan.batch_size);
            break;
        case Mode::Md:
            p.steps_per_round = max_rows / c.federation.gan.batch_size;
            if (c.federation.swap_interval > 0 && p.clients > 1) p.swaps = c.rounds / c.federation.swap_interval;
            break;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Run.

using TransportFactory = std::function<std::unique_ptr<Transport>(std::vector<Endpoint*>)>;

struct RunResult {
    std::vector<MetricRow> metrics;
    std::vector<RoundRecord> rounds;
    SimilarityScore final_score;
    GlobalSetup setup;
    GanModel model;
    TrafficCounters traffic;
};

namespace detail {

inline json setup_json(const GlobalSetup& s, Mode mode, Fusion fusion) {
    json clients = json::array();
    for (std::size_t i = 0; i < s.counts.size(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < s.divergence.entries.cols(); ++j)
            row.push_back(s.divergence.entries(static_cast<Eigen::Index>(i), j));
        json norm = json::array();
        for (Eigen::Index j = 0; j < s.trace.normalized.cols(); ++j)
            norm.push_back(s.trace.normalized(static_cast<Eigen::Index>(i), j));
        clients.push_back({{"client", i},
                           {"rows", s.counts[i]},
                           {"weight", s.weights[i]},
                           {"similarity_weight", s.trace.weights[i]},
                           {"divergence", row},
                           {"normalized_divergence", norm},
                           {"divergence_sum", s.trace.row_sums[i]},
                           {"fused_score", s.trace.fused[i]}});
    }
    json cols = json::array();
    for (std::size_t j = 0; j < s.schema.size(); ++j)
        cols.push_back({{"name", s.schema[j].name}, {"kind", std::string(to_string(s.schema[j].kind))}});
    return {{"mode", std::string(to_string(mode))},
            {"fusion", std::string(to_string(fusion))},
            {"columns", cols},
            {"clients", clients}};
}

inline json schema_json(const std::vector<ColumnMeta>& schema) {
    json cols = json::array();
    for (const auto& m : schema) cols.push_back({{"name", m.name}, {"kind", std::string(to_string(m.kind))}});
    return cols;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::Io, "cannot write " + path.string());
    out << text;
    require(out.good(), ErrorKind::Io, "failed writing " + path.string());
}

class RoundsWriter {
public:
    explicit RoundsWriter(const fs::path& path) : out_(path, std::ios::trunc) {
        require(out_.good(), ErrorKind::Io, "cannot write " + path.string());
        out_ << "round,steps,bytes_sent,bytes_received,modeled_s,wall_s\n";
    }
    void append(const RoundRecord& r) {
        out_ << r.round << ',' << r.steps << ',' << r.bytes_sent << ',' << r.bytes_received << ','
             << format_real(r.modeled_seconds) << ',' << format_real(r.wall_seconds) << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

}  // namespace detail

/// Trains one experiment and writes metrics.csv, rounds.csv, weights.json,
/// summary.json, synthetic.csv and config.yaml into `out`. `factory`
/// replaces the in-process transport (ignored for tcp runs).
inline RunResult cmd_run(const RunConfig& c, const fs::path& out, const TransportFactory& factory = {}) {
    fs::create_directories(out);
    detail::write_text(out / "config.yaml", to_yaml(c));
    const auto data = prepare(c);
    const auto& real = data.table;
    const std::size_t eval_n = c.eval_samples > 0 ? c.eval_samples : real.rows();
    spdlog::info("{} run: {} rows, {} clients, {} rounds -> {}", to_string(c.federation.mode), real.rows(),
                 data.shards.size(), c.rounds, out.string());

    std::vector<std::unique_ptr<ClientNode>> nodes;
    std::unique_ptr<Transport> transport;
    std::unique_ptr<TcpListener> listener;
    std::unique_ptr<Federator> federator;
    std::unique_ptr<CentralizedSession> central;
    Session* session = nullptr;
    if (c.federation.mode == Mode::Centralized) {
        central = std::make_unique<CentralizedSession>(real, c.federation);
        session = central.get();
    } else {
        if (c.transport.tcp) {
            listener = std::make_unique<TcpListener>(c.transport.address);
            spdlog::info("waiting for {} clients on port {}", data.shards.size(), listener->port());
            transport = std::make_unique<TcpTransport>(*listener, data.shards.size(), c.transport.connect_timeout);
        } else {
            std::vector<Endpoint*> eps;
            for (std::size_t i = 0; i < data.shards.size(); ++i) {
                nodes.push_back(std::make_unique<ClientNode>(static_cast<std::uint32_t>(i), data.shards[i]));
                eps.push_back(nodes.back().get());
            }
            transport = factory ? factory(eps) : std::make_unique<InProcTransport>(eps);
        }
        federator = std::make_unique<Federator>(*transport, c.federation);
        federator->initialize();
        session = federator.get();
    }
    const auto& setup = session->setup();
    detail::write_text(out / "weights.json", detail::setup_json(setup, c.federation.mode, c.federation.fusion).dump(2) + "\n");

    RunResult result;
    MetricsWriter metrics(out / "metrics.csv");
    detail::RoundsWriter rounds_csv(out / "rounds.csv");
    const auto t0 = std::chrono::steady_clock::now();
    double logical = 0.0;
    SimilarityScore last_score;

    auto synth_at = [&](std::size_t round) {
        return sample_synthetic(session->model(), eval_n, setup.schema, setup.layout, setup.encoders,
                                derive_seed(c.seed, Stream::Eval, {round}));
    };
    auto hook = [&](const RoundRecord* r, Session&) {
        MetricRow row;
        row.round = r ? r->round : 0;
        if (r) {
            rounds_csv.append(*r);
            result.rounds.push_back(*r);
            row.gen_loss = r->loss.gen;
            row.disc_loss = r->loss.disc;
            logical += r->modeled_seconds;
        }
        if (c.clock == Clock::Logical) {
            row.wall_clock_s = logical;
        } else {
            row.wall_clock_s = fedtgan::detail::seconds_since(t0);
            if (!result.metrics.empty() && row.wall_clock_s <= result.metrics.back().wall_clock_s)
                row.wall_clock_s = std::nextafter(result.metrics.back().wall_clock_s, 1e300);
        }
        if (row.round % c.eval_stride == 0 || row.round == c.rounds) {
            last_score = evaluate(real, synth_at(row.round));
            row.avg_jsd = last_score.avg_jsd;
            row.avg_wd = last_score.avg_wd;
        }
        metrics.append(row);
        result.metrics.push_back(row);
        spdlog::debug("round {}: jsd {} wd {}", row.round, detail::format_real(row.avg_jsd.value_or(-1)),
                      detail::format_real(row.avg_wd.value_or(-1)));
    };
    run_training(*session, c.rounds, hook);

    if (federator) {
        federator->shutdown();
        result.traffic = federator->traffic();
    }
    const Table synth = synth_at(c.rounds);
    write_csv(synth, out / "synthetic.csv");

    json per_column = json::object();
    for (const auto& [name, v] : last_score.per_column) per_column[name] = v;
    json summary = {{"mode", std::string(to_string(c.federation.mode))},
                    {"rounds", c.rounds},
                    {"clients", setup.counts.size()},
                    {"avg_jsd", detail::optional_json(last_score.avg_jsd)},
                    {"avg_wd", detail::optional_json(last_score.avg_wd)},
                    {"per_column", per_column},
                    {"schema", detail::schema_json(setup.schema)},
                    {"encoded_width", setup.layout.width},
                    {"bytes_to_clients", result.traffic.bytes_to_clients},
                    {"bytes_from_clients", result.traffic.bytes_from_clients},
                    {"seed", c.seed}};
    detail::write_text(out / "summary.json", summary.dump(2) + "\n");

    result.final_score = last_score;
    result.setup = setup;
    result.model = session->model();
    spdlog::info("finished: avg_jsd {} avg_wd {}", detail::format_real(last_score.avg_jsd.value_or(NAN)),
                 detail::format_real(last_score.avg_wd.value_or(NAN)));
    return result;
}

/// Serves shard `id` of the configured scenario to a tcp federator.
inline void cmd_client(const RunConfig& c, std::uint32_t id, const std::string& address) {
    auto data = prepare(c);
    require(id < data.shards.size(), ErrorKind::Config,
            "client id " + std::to_string(id) + " but the scenario has " + std::to_string(data.shards.size()) +
                " clients");
    ClientNode node(id, std::move(data.shards[id]));
    spdlog::info("client {} serving {} rows to {}", id, node.shard().rows(), address);
    serve_client(address, id, node, c.transport.connect_timeout);
}

// ---------------------------------------------------------------------------
// Compare.

struct ComparisonRow {
    fs::path dir;
    std::string mode;
    std::optional<double> avg_jsd;
    std::optional<double> avg_wd;
    bool best_jsd = false;
    bool best_wd = false;
};

inline std::vector<ComparisonRow> cmd_compare(const std::vector<fs::path>& dirs) {
    require(!dirs.empty(), ErrorKind::InvalidArgument, "nothing to compare");
    std::vector<ComparisonRow> rows;
    std::optional<json> schema;
    for (const auto& d : dirs) {
        const auto path = d / "summary.json";
        std::ifstream in(path);
        require(in.good(), ErrorKind::MissingFile, "missing " + path.string());
        json s;
        try {
            in >> s;
            ComparisonRow r;
            r.dir = d;
            r.mode = s.at("mode").get<std::string>();
            if (!s.at("avg_jsd").is_null()) r.avg_jsd = s["avg_jsd"].get<double>();
            if (!s.at("avg_wd").is_null()) r.avg_wd = s["avg_wd"].get<double>();
            if (!schema) schema = s.at("schema");
            require(s.at("schema") == *schema, ErrorKind::SchemaMismatch,
                    path.string() + " has a different schema from " + (dirs.front() / "summary.json").string());
            rows.push_back(r);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Io, "corrupt " + path.string() + ": " + e.what());
        }
    }
    auto mark = [&](auto field, auto flag) {
        std::optional<double> best;
        for (const auto& r : rows)
            if (r.*field && (!best || *(r.*field) < *best)) best = r.*field;
        for (auto& r : rows) r.*flag = best && r.*field == best;
    };
    mark(&ComparisonRow::avg_jsd, &ComparisonRow::best_jsd);
    mark(&ComparisonRow::avg_wd, &ComparisonRow::best_wd);
    return rows;
}

inline std::string comparison_text(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    auto cell = [](const std::optional<double>& v, bool best) {
        std::ostringstream c;
        if (v)
            c << std::fixed << std::setprecision(6) << *v << (best ? " *" : "  ");
        else
            c << "-";
        return c.str();
    };
    os << std::left << std::setw(32) << "run" << std::setw(13) << "mode" << std::setw(12) << "avg_jsd"
       << "avg_wd\n";
    for (const auto& r : rows)
        os << std::left << std::setw(32) << r.dir.filename().string() << std::setw(13) << r.mode << std::setw(12)
           << cell(r.avg_jsd, r.best_jsd) << cell(r.avg_wd, r.best_wd) << '\n';
    return os.str();
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    os << "run,mode,avg_jsd,avg_wd,best_jsd,best_wd\n";
    for (const auto& r : rows)
        os << fedtgan::detail::csv_escape(r.dir.string()) << ',' << r.mode << ',' << fedtgan::detail::format_optional(r.avg_jsd) << ','
           << fedtgan::detail::format_optional(r.avg_wd) << ',' << r.best_jsd << ',' << r.best_wd << '\n';
    return os.str();
}

}  // namespace fedtgan::app
