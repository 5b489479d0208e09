#pragma once

// Binary message format shared by every transport.
//
// Frame: u32 LE length of everything after it | u8 tag | u32 LE round | payload.
// Payload encodings are documented in docs/wire-format.md.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fedtgan/encoders.hpp"
#include "fedtgan/error.hpp"
#include "fedtgan/gan.hpp"
#include "fedtgan/matrix.hpp"
#include "fedtgan/nn.hpp"
#include "fedtgan/similarity.hpp"
#include "fedtgan/table.hpp"

static_assert(std::endian::native == std::endian::little, "wire encoding assumes a little-endian host");

namespace fedtgan::wire {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kLengthPrefix = 4;
inline constexpr std::size_t kFrameHeader = kLengthPrefix + 1 + 4;
inline constexpr std::uint32_t kMaxFrame = 1u << 30;

enum class Tag : std::uint8_t {
    StatsRequest = 1,
    StatsReport = 2,
    EncoderBundle = 3,
    Ack = 4,
    TrainOrder = 5,
    ModelUpload = 6,
    ModelBroadcast = 7,
    FakeBatch = 8,
    DiscFeedback = 9,
    SwapOrder = 10,
    Shutdown = 11,
    Failure = 12,
};

inline constexpr Tag kAllTags[] = {Tag::StatsRequest, Tag::StatsReport,  Tag::EncoderBundle, Tag::Ack,
                                   Tag::TrainOrder,   Tag::ModelUpload,  Tag::ModelBroadcast, Tag::FakeBatch,
                                   Tag::DiscFeedback, Tag::SwapOrder,    Tag::Shutdown,       Tag::Failure};

inline std::string_view to_string(Tag t) {
    switch (t) {
        case Tag::StatsRequest: return "StatsRequest";
        case Tag::StatsReport: return "StatsReport";
        case Tag::EncoderBundle: return "EncoderBundle";
        case Tag::Ack: return "Ack";
        case Tag::TrainOrder: return "TrainOrder";
        case Tag::ModelUpload: return "ModelUpload";
        case Tag::ModelBroadcast: return "ModelBroadcast";
        case Tag::FakeBatch: return "FakeBatch";
        case Tag::DiscFeedback: return "DiscFeedback";
        case Tag::SwapOrder: return "SwapOrder";
        case Tag::Shutdown: return "Shutdown";
        case Tag::Failure: return "Failure";
    }
    return "?";
}

// Federator -> client: compute local statistics.
struct StatsRequest {
    std::uint64_t seed = 0;
    std::uint32_t max_modes = 0;
};

struct StatsReport {
    std::uint32_t client_id = 0;
    std::uint64_t rows = 0;
    std::vector<ColumnMeta> schema;
    std::vector<ColumnStatistic> columns;
};

struct EncoderBundle {
    std::string mode;
    GanConfig gan;
    std::vector<ColumnMeta> schema;
    EncodedLayout layout;
    std::vector<ColumnEncoder> encoders;
};

struct Ack {
    std::uint32_t client_id = 0;
};

struct TrainOrder {
    std::uint32_t epochs = 0;
    std::uint64_t first_epoch = 0;
};

struct ModelUpload {
    std::uint32_t client_id = 0;
    nn::ModelParams gen;
    nn::ModelParams disc;
    double gen_loss = 0.0;
    double disc_loss = 0.0;
    std::uint64_t steps = 0;
};

struct ModelBroadcast {
    nn::ModelParams gen;
    nn::ModelParams disc;
};

// md mode only: synthetic rows produced by the server generator.
struct FakeBatch {
    std::uint64_t epoch = 0;
    std::uint64_t step = 0;
    Matrix rows;
};

struct DiscFeedback {
    std::uint32_t client_id = 0;
    Matrix grad;  // d L_gen / d fake batch
    double disc_loss = 0.0;
    double gen_loss = 0.0;
};

// Client i receives the discriminator currently held by client permutation[i].
struct SwapOrder {
    std::vector<std::uint32_t> permutation;
};

struct Shutdown {};

struct Failure {
    std::uint32_t client_id = 0;
    ErrorKind kind = ErrorKind::ClientFailure;
    std::string message;
};

using Body = std::variant<StatsRequest, StatsReport, EncoderBundle, Ack, TrainOrder, ModelUpload, ModelBroadcast,
                          FakeBatch, DiscFeedback, SwapOrder, Shutdown, Failure>;

struct Message {
    std::uint32_t round = 0;
    Body body;
};

inline Tag tag_of(const Body& b) { return static_cast<Tag>(b.index() + 1); }

// ---------------------------------------------------------------------------
// Field schema. Every value a message can carry is listed here with the kind
// of information it holds.

enum class FieldKind {
    Control,            // round numbers, epoch/step counters, permutations
    Identifier,         // client ids
    Count,              // row counts
    SchemaInfo,         // column names and kinds, layout
    CategoryFrequency,  // per-token counts of one column
    MixtureParameters,  // per-column Gaussian mixture
    Configuration,      // GAN hyper-parameters, mode, seeds
    ModelParameters,
    Gradient,           // derivative w.r.t. a synthetic batch
    Loss,
    Diagnostic,
    SyntheticRows,      // encoded generator output
    TableCells,         // raw rows of a client shard
};

struct FieldDescriptor {
    std::string_view name;
    FieldKind kind;
};

inline std::vector<FieldDescriptor> fields_of(Tag t) {
    using K = FieldKind;
    switch (t) {
        case Tag::StatsRequest: return {{"seed", K::Configuration}, {"max_modes", K::Configuration}};
        case Tag::StatsReport:
            return {{"client_id", K::Identifier},
                    {"rows", K::Count},
                    {"schema", K::SchemaInfo},
                    {"categorical", K::CategoryFrequency},
                    {"continuous", K::MixtureParameters}};
        case Tag::EncoderBundle:
            return {{"mode", K::Configuration},
                    {"gan", K::Configuration},
                    {"schema", K::SchemaInfo},
                    {"layout", K::SchemaInfo},
                    {"label_encoders", K::SchemaInfo},
                    {"mixtures", K::MixtureParameters}};
        case Tag::Ack: return {{"client_id", K::Identifier}};
        case Tag::TrainOrder: return {{"epochs", K::Control}, {"first_epoch", K::Control}};
        case Tag::ModelUpload:
            return {{"client_id", K::Identifier}, {"gen", K::ModelParameters}, {"disc", K::ModelParameters},
                    {"gen_loss", K::Loss},         {"disc_loss", K::Loss},      {"steps", K::Control}};
        case Tag::ModelBroadcast: return {{"gen", K::ModelParameters}, {"disc", K::ModelParameters}};
        case Tag::FakeBatch: return {{"epoch", K::Control}, {"step", K::Control}, {"rows", K::SyntheticRows}};
        case Tag::DiscFeedback:
            return {{"client_id", K::Identifier}, {"grad", K::Gradient}, {"disc_loss", K::Loss}, {"gen_loss", K::Loss}};
        case Tag::SwapOrder: return {{"permutation", K::Control}};
        case Tag::Shutdown: return {};
        case Tag::Failure: return {{"client_id", K::Identifier}, {"kind", K::Diagnostic}, {"message", K::Diagnostic}};
    }
    return {};
}

// ---------------------------------------------------------------------------

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void str(std::string_view s) {
        u32(checked32(s.size()));
        raw(s.data(), s.size());
    }
    void f64s(const double* p, std::size_t n) { raw(p, n * 8); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    Bytes& bytes() { return out_; }

    static std::uint32_t checked32(std::size_t n) {
        require(n <= 0xFFFFFFFFu, ErrorKind::Protocol, "field too large for the wire format");
        return static_cast<std::uint32_t>(n);
    }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() { return load<std::uint32_t>(); }
    std::uint64_t u64() { return load<std::uint64_t>(); }
    double f64() { return load<double>(); }
    std::string str() {
        const auto n = u32();
        const auto b = take(n);
        return {reinterpret_cast<const char*>(b.data()), b.size()};
    }
    void f64s(double* p, std::size_t n) {
        require(n <= remaining() / 8, ErrorKind::Protocol, "truncated message");
        const auto b = take(n * 8);
        if (n) std::memcpy(p, b.data(), n * 8);
    }
    std::size_t remaining() const { return in_.size() - pos_; }
    void finish() const { require(pos_ == in_.size(), ErrorKind::Protocol, "trailing bytes in message"); }

private:
    template <class T>
    T load() {
        T v;
        std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        require(n <= remaining(), ErrorKind::Protocol, "truncated message");
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Payload pieces.

inline std::string manifest_json(const nn::ModelParams& p) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& b : p.manifest) j.push_back({{"name", b.name}, {"shape", {b.rows, b.cols}}, {"offset", b.offset}});
    return j.dump();
}

inline void put(Writer& w, const nn::ModelParams& p) {
    w.str(manifest_json(p));
    w.u64(p.flat.size());
    w.f64s(p.flat.data(), p.flat.size());
}

inline void get(Reader& r, nn::ModelParams& p) {
    const auto text = r.str();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        p.manifest.clear();
        for (const auto& b : j)
            p.manifest.push_back({b.at("name").get<std::string>(), b.at("shape").at(0).get<std::size_t>(),
                                  b.at("shape").at(1).get<std::size_t>(), b.at("offset").get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Protocol, std::string("bad parameter manifest: ") + e.what());
    }
    const auto n = r.u64();
    require(n <= r.remaining() / 8, ErrorKind::Protocol, "truncated parameter vector");
    p.flat.resize(n);
    r.f64s(p.flat.data(), n);
    try {
        p.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Protocol, e.what());
    }
}

/// Wire size of a ModelParams payload.
inline std::size_t encoded_size(const nn::ModelParams& p) { return 4 + manifest_json(p).size() + 8 + 8 * p.size(); }

inline void put(Writer& w, const Matrix& m) {
    w.u32(Writer::checked32(static_cast<std::size_t>(m.rows())));
    w.u32(Writer::checked32(static_cast<std::size_t>(m.cols())));
    w.f64s(m.data(), static_cast<std::size_t>(m.size()));
}

inline void get(Reader& r, Matrix& m) {
    const auto rows = r.u32(), cols = r.u32();
    require(static_cast<std::uint64_t>(rows) * cols <= r.remaining() / 8, ErrorKind::Protocol, "truncated matrix");
    m.resize(rows, cols);
    r.f64s(m.data(), static_cast<std::size_t>(m.size()));
}

inline void put(Writer& w, const GmmParams& g) {
    w.u32(Writer::checked32(g.modes()));
    for (std::size_t k = 0; k < g.modes(); ++k) {
        w.f64(g.weights[k]);
        w.f64(g.means[k]);
        w.f64(g.stds[k]);
    }
}

inline void get(Reader& r, GmmParams& g) {
    const auto k = r.u32();
    require(k <= r.remaining() / 24, ErrorKind::Protocol, "truncated mixture");
    g = {};
    for (std::uint32_t i = 0; i < k; ++i) {
        g.weights.push_back(r.f64());
        g.means.push_back(r.f64());
        g.stds.push_back(r.f64());
    }
}

inline void put(Writer& w, const CategoricalStats& s) {
    w.str(s.column);
    w.u32(Writer::checked32(s.counts.size()));
    for (const auto& [token, n] : s.counts) {
        w.str(token);
        w.u64(n);
    }
}

inline void get(Reader& r, CategoricalStats& s) {
    s.column = r.str();
    s.counts.clear();
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        auto token = r.str();
        s.counts[std::move(token)] = r.u64();
    }
}

inline void put(Writer& w, const std::vector<ColumnMeta>& schema) {
    w.u32(Writer::checked32(schema.size()));
    for (const auto& m : schema) {
        w.str(m.name);
        w.u8(static_cast<std::uint8_t>(m.kind));
    }
}

inline ColumnKind get_kind(Reader& r) {
    const auto k = r.u8();
    require(k <= 1, ErrorKind::Protocol, "unknown column kind " + std::to_string(k));
    return static_cast<ColumnKind>(k);
}

inline void get(Reader& r, std::vector<ColumnMeta>& schema) {
    schema.clear();
    const auto n = r.u32();
    for (std::uint32_t j = 0; j < n; ++j) {
        auto name = r.str();
        schema.push_back({std::move(name), get_kind(r), j});
    }
}

inline void put(Writer& w, const EncodedLayout& l) {
    w.u32(Writer::checked32(l.segments.size()));
    for (const auto& s : l.segments) {
        w.u32(Writer::checked32(s.column));
        w.u8(static_cast<std::uint8_t>(s.kind));
        w.u32(Writer::checked32(s.offset));
        w.u32(Writer::checked32(s.width));
    }
    w.u32(Writer::checked32(l.width));
}

inline void get(Reader& r, EncodedLayout& l) {
    l = {};
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        Segment s;
        s.column = r.u32();
        s.kind = get_kind(r);
        s.offset = r.u32();
        s.width = r.u32();
        l.segments.push_back(s);
    }
    l.width = r.u32();
}

inline void put(Writer& w, const ColumnStatistic& s) {
    w.u8(static_cast<std::uint8_t>(s.index()));
    std::visit([&](const auto& v) { put(w, v); }, s);
}

inline void get(Reader& r, ColumnStatistic& s) {
    const auto k = r.u8();
    if (k == 0) {
        CategoricalStats c;
        get(r, c);
        s = std::move(c);
    } else {
        require(k == 1, ErrorKind::Protocol, "unknown statistic kind");
        GmmParams g;
        get(r, g);
        s = std::move(g);
    }
}

inline void put(Writer& w, const ColumnEncoder& e) {
    w.u8(static_cast<std::uint8_t>(e.index()));
    if (const auto* le = std::get_if<LabelEncoder>(&e)) {
        w.str(le->column);
        w.u32(Writer::checked32(le->categories.size()));
        for (const auto& c : le->categories) w.str(c);
    } else {
        put(w, std::get<GmmParams>(e));
    }
}

inline void get(Reader& r, ColumnEncoder& e) {
    const auto k = r.u8();
    if (k == 0) {
        LabelEncoder le;
        le.column = r.str();
        const auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) le.categories.push_back(r.str());
        e = std::move(le);
    } else {
        require(k == 1, ErrorKind::Protocol, "unknown encoder kind");
        GmmParams g;
        get(r, g);
        e = std::move(g);
    }
}

inline nlohmann::json gan_config_json(const GanConfig& c) {
    return {{"noise_dim", c.noise_dim}, {"gen_hidden", c.gen_hidden}, {"disc_hidden", c.disc_hidden},
            {"batch_size", c.batch_size}, {"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2},
            {"tau", c.tau}, {"real_label", c.real_label}, {"seed", c.seed}};
}

inline GanConfig gan_config_from_json(const nlohmann::json& j) {
    GanConfig c;
    c.noise_dim = j.at("noise_dim").get<std::size_t>();
    c.gen_hidden = j.at("gen_hidden").get<std::vector<std::size_t>>();
    c.disc_hidden = j.at("disc_hidden").get<std::vector<std::size_t>>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.tau = j.at("tau").get<double>();
    c.real_label = j.at("real_label").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

// ---------------------------------------------------------------------------
// Bodies.

inline void put_body(Writer& w, const StatsRequest& m) {
    w.u64(m.seed);
    w.u32(m.max_modes);
}
inline void put_body(Writer& w, const StatsReport& m) {
    require(m.schema.size() == m.columns.size(), ErrorKind::Protocol, "statistics do not match the schema");
    w.u32(m.client_id);
    w.u64(m.rows);
    put(w, m.schema);
    for (const auto& c : m.columns) put(w, c);
}
inline void put_body(Writer& w, const EncoderBundle& m) {
    require(m.schema.size() == m.encoders.size(), ErrorKind::Protocol, "encoders do not match the schema");
    w.str(m.mode);
    w.str(gan_config_json(m.gan).dump());
    put(w, m.schema);
    put(w, m.layout);
    for (const auto& e : m.encoders) put(w, e);
}
inline void put_body(Writer& w, const Ack& m) { w.u32(m.client_id); }
inline void put_body(Writer& w, const TrainOrder& m) {
    w.u32(m.epochs);
    w.u64(m.first_epoch);
}
inline void put_body(Writer& w, const ModelUpload& m) {
    w.u32(m.client_id);
    put(w, m.gen);
    put(w, m.disc);
    w.f64(m.gen_loss);
    w.f64(m.disc_loss);
    w.u64(m.steps);
}
inline void put_body(Writer& w, const ModelBroadcast& m) {
    put(w, m.gen);
    put(w, m.disc);
}
inline void put_body(Writer& w, const FakeBatch& m) {
    w.u64(m.epoch);
    w.u64(m.step);
    put(w, m.rows);
}
inline void put_body(Writer& w, const DiscFeedback& m) {
    w.u32(m.client_id);
    put(w, m.grad);
    w.f64(m.disc_loss);
    w.f64(m.gen_loss);
}
inline void put_body(Writer& w, const SwapOrder& m) {
    w.u32(Writer::checked32(m.permutation.size()));
    for (auto v : m.permutation) w.u32(v);
}
inline void put_body(Writer&, const Shutdown&) {}
inline void put_body(Writer& w, const Failure& m) {
    w.u32(m.client_id);
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.str(m.message);
}

inline Body get_body(Reader& r, Tag tag) {
    switch (tag) {
        case Tag::StatsRequest: {
            StatsRequest m;
            m.seed = r.u64();
            m.max_modes = r.u32();
            return m;
        }
        case Tag::StatsReport: {
            StatsReport m;
            m.client_id = r.u32();
            m.rows = r.u64();
            get(r, m.schema);
            m.columns.resize(m.schema.size());
            for (auto& c : m.columns) get(r, c);
            return m;
        }
        case Tag::EncoderBundle: {
            EncoderBundle m;
            m.mode = r.str();
            try {
                m.gan = gan_config_from_json(nlohmann::json::parse(r.str()));
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorKind::Protocol, std::string("bad GAN configuration: ") + e.what());
            }
            get(r, m.schema);
            get(r, m.layout);
            m.encoders.resize(m.schema.size());
            for (auto& e : m.encoders) get(r, e);
            return m;
        }
        case Tag::Ack: return Ack{r.u32()};
        case Tag::TrainOrder: {
            TrainOrder m;
            m.epochs = r.u32();
            m.first_epoch = r.u64();
            return m;
        }
        case Tag::ModelUpload: {
            ModelUpload m;
            m.client_id = r.u32();
            get(r, m.gen);
            get(r, m.disc);
            m.gen_loss = r.f64();
            m.disc_loss = r.f64();
            m.steps = r.u64();
            return m;
        }
        case Tag::ModelBroadcast: {
            ModelBroadcast m;
            get(r, m.gen);
            get(r, m.disc);
            return m;
        }
        case Tag::FakeBatch: {
            FakeBatch m;
            m.epoch = r.u64();
            m.step = r.u64();
            get(r, m.rows);
            return m;
        }
        case Tag::DiscFeedback: {
            DiscFeedback m;
            m.client_id = r.u32();
            get(r, m.grad);
            m.disc_loss = r.f64();
            m.gen_loss = r.f64();
            return m;
        }
        case Tag::SwapOrder: {
            SwapOrder m;
            const auto n = r.u32();
            require(n <= r.remaining() / 4, ErrorKind::Protocol, "truncated permutation");
            for (std::uint32_t i = 0; i < n; ++i) m.permutation.push_back(r.u32());
            return m;
        }
        case Tag::Shutdown: return Shutdown{};
        case Tag::Failure: {
            Failure m;
            m.client_id = r.u32();
            const auto k = r.u8();
            require(k <= static_cast<std::uint8_t>(ErrorKind::Io), ErrorKind::Protocol, "unknown error kind");
            m.kind = static_cast<ErrorKind>(k);
            m.message = r.str();
            return m;
        }
    }
    throw Error(ErrorKind::Protocol, "unknown message tag " + std::to_string(static_cast<int>(tag)));
}

/// Serializes a message into one complete frame.
inline Bytes encode(const Message& msg) {
    Writer w;
    w.u32(0);
    w.u8(static_cast<std::uint8_t>(tag_of(msg.body)));
    w.u32(msg.round);
    std::visit([&](const auto& b) { put_body(w, b); }, msg.body);
    auto& out = w.bytes();
    const std::uint32_t len = Writer::checked32(out.size() - kLengthPrefix);
    std::memcpy(out.data(), &len, 4);
    return std::move(out);
}

inline Tag frame_tag(std::span<const std::uint8_t> frame) {
    require(frame.size() >= kFrameHeader, ErrorKind::Protocol, "frame shorter than its header");
    return static_cast<Tag>(frame[kLengthPrefix]);
}

/// Parses one complete frame (length prefix included).
inline Message decode(std::span<const std::uint8_t> frame) {
    Reader r(frame);
    const auto len = r.u32();
    require(len == frame.size() - kLengthPrefix, ErrorKind::Protocol,
            "length prefix " + std::to_string(len) + " does not match frame of " + std::to_string(frame.size()) +
                " bytes");
    const auto raw_tag = r.u8();
    require(raw_tag >= 1 && raw_tag <= static_cast<std::uint8_t>(Tag::Failure), ErrorKind::Protocol,
            "unknown message tag " + std::to_string(raw_tag));
    Message m;
    m.round = r.u32();
    m.body = get_body(r, static_cast<Tag>(raw_tag));
    r.finish();
    return m;
}

template <class T>
const T& expect(const Message& m, std::string_view context) {
    if (const auto* f = std::get_if<Failure>(&m.body))
        throw Error(ErrorKind::ClientFailure, "client " + std::to_string(f->client_id) + " failed during " +
                                                  std::string(context) + ": [" + std::string(to_string(f->kind)) +
                                                  "] " + f->message);
    const auto* v = std::get_if<T>(&m.body);
    require(v != nullptr, ErrorKind::Protocol,
            "unexpected " + std::string(to_string(tag_of(m.body))) + " during " + std::string(context));
    return *v;
}

}  // namespace fedtgan::wire
