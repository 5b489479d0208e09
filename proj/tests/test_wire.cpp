#include <gtest/gtest.h>

#include <random>

#include "fedtgan/wire.hpp"

using namespace fedtgan;
using namespace fedtgan::wire;

namespace {

nn::ModelParams small_params() {
    const nn::NetSpec spec{3, {{4, nn::Activation::Relu}}, {{2, nn::OutputActivation::Tanh}}};
    return nn::init_params(spec, 5);
}

Matrix small_matrix() {
    Matrix m(2, 3);
    m << 1.5, -2.0, 0.25, 1e-300, 7.0, -0.0;
    return m;
}

std::vector<Body> one_of_each() {
    GanConfig gan;
    gan.lr = 0.1 + 0.2;  // not exactly representable in decimal
    gan.seed = 0xFFFFFFFFFFFFFFFFull;
    const std::vector<ColumnMeta> schema{{"c", ColumnKind::Categorical, 0}, {"v", ColumnKind::Continuous, 1}};
    const std::vector<ColumnEncoder> enc{LabelEncoder{"c", {"a", "b,\"q\""}}, GmmParams{{1.0}, {2.0}, {3.0}}};
    return {StatsRequest{42, 10},
            StatsReport{3, 100, schema, {CategoricalStats{"c", {{"a", 60}, {"b", 40}}}, GmmParams{{0.4, 0.6}, {1, 2}, {3, 4}}}},
            EncoderBundle{"md", gan, schema, make_layout(schema, enc), enc},
            Ack{7},
            TrainOrder{5, 123},
            ModelUpload{2, small_params(), small_params(), 0.7, 1.3, 40},
            ModelBroadcast{small_params(), {}},
            FakeBatch{4, 9, small_matrix()},
            DiscFeedback{1, small_matrix(), 0.5, 0.25},
            SwapOrder{{2, 0, 1}},
            Shutdown{},
            Failure{1, ErrorKind::ShardTooSmall, "too small"}};
}

}  // namespace

TEST(Wire, EveryMessageRoundTrips) {
    const auto bodies = one_of_each();
    ASSERT_EQ(bodies.size(), std::size(kAllTags));
    for (std::size_t k = 0; k < bodies.size(); ++k) {
        const Message m{static_cast<std::uint32_t>(k * 3), bodies[k]};
        const auto frame = encode(m);
        EXPECT_EQ(frame_tag(frame), kAllTags[k]);
        const auto back = decode(frame);
        EXPECT_EQ(back.round, m.round);
        ASSERT_EQ(back.body.index(), m.body.index());
        EXPECT_EQ(encode(back), frame) << to_string(kAllTags[k]);
    }
}

TEST(Wire, FieldsSurviveExactly) {
    const auto bodies = one_of_each();
    const auto bundle = std::get<EncoderBundle>(decode(encode({0, bodies[2]})).body);
    EXPECT_EQ(bundle.gan.lr, 0.1 + 0.2);
    EXPECT_EQ(bundle.gan.seed, 0xFFFFFFFFFFFFFFFFull);
    EXPECT_EQ(bundle.encoders, std::get<EncoderBundle>(bodies[2]).encoders);
    EXPECT_EQ(bundle.layout, std::get<EncoderBundle>(bodies[2]).layout);

    const auto up = std::get<ModelUpload>(decode(encode({0, bodies[5]})).body);
    EXPECT_EQ(up.gen, small_params());
    const auto fb = std::get<FakeBatch>(decode(encode({0, bodies[7]})).body);
    EXPECT_EQ(fb.rows, small_matrix());
    EXPECT_TRUE(std::signbit(fb.rows(1, 2)));
}

TEST(Wire, FrameHeaderLayout) {
    const auto frame = encode({0x01020304, Ack{0xAABBCCDD}});
    ASSERT_EQ(frame.size(), kFrameHeader + 4);
    EXPECT_EQ(frame[0], 9);  // length excludes its own 4 bytes
    EXPECT_EQ(frame[1], 0);
    EXPECT_EQ(frame[4], static_cast<std::uint8_t>(Tag::Ack));
    EXPECT_EQ(frame[5], 0x04);
    EXPECT_EQ(frame[8], 0x01);
    EXPECT_EQ(frame[9], 0xDD);
}

TEST(Wire, PayloadSizeArithmetic) {
    const Matrix m = Matrix::Zero(100, 7);
    EXPECT_EQ(encode({0, FakeBatch{0, 0, m}}).size(), kFrameHeader + 8 + 8 + 4 + 4 + 100 * 7 * 8);
    EXPECT_EQ(encode({0, DiscFeedback{0, m, 0, 0}}).size(), kFrameHeader + 4 + 4 + 4 + 100 * 7 * 8 + 16);
    const auto p = small_params();
    EXPECT_EQ(encoded_size(p), 4 + manifest_json(p).size() + 8 + 8 * p.size());
    EXPECT_EQ(encode({0, ModelBroadcast{p, p}}).size(), kFrameHeader + 2 * encoded_size(p));
}

TEST(Wire, MalformedFramesAreProtocolErrors) {
    auto frame = encode({1, TrainOrder{1, 2}});
    auto expect_protocol = [](const Bytes& b) {
        try {
            decode(b);
            FAIL() << "accepted a malformed frame";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Protocol);
        }
    };
    Bytes truncated(frame.begin(), frame.end() - 1);
    expect_protocol(truncated);
    Bytes trailing = frame;
    trailing.push_back(0);
    expect_protocol(trailing);
    Bytes bad_tag = frame;
    bad_tag[4] = 99;
    expect_protocol(bad_tag);
    expect_protocol(Bytes{1, 0});

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        Bytes junk(rng() % 64);
        for (auto& b : junk) b = static_cast<std::uint8_t>(rng());
        if (junk.size() >= 4) {
            const std::uint32_t len = static_cast<std::uint32_t>(junk.size() - 4);
            std::memcpy(junk.data(), &len, 4);
        }
        try {
            decode(junk);
        } catch (const Error&) {
        }
    }
}

TEST(Wire, ExpectSurfacesClientFailures) {
    const Message fail{0, Failure{2, ErrorKind::UnknownToken, "boom"}};
    try {
        expect<Ack>(fail, "test");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ClientFailure);
        EXPECT_NE(std::string(e.what()).find("client 2"), std::string::npos);
    }
    EXPECT_THROW(expect<Ack>(Message{0, Shutdown{}}, "test"), Error);
}

TEST(Privacy, OnlyFakeBatchCarriesRows) {
    for (Tag t : kAllTags) {
        for (const auto& f : fields_of(t)) {
            EXPECT_NE(f.kind, FieldKind::TableCells) << to_string(t) << "." << f.name;
            if (f.kind == FieldKind::SyntheticRows) EXPECT_EQ(t, Tag::FakeBatch) << f.name;
        }
    }
    bool fake_has_rows = false;
    for (const auto& f : fields_of(Tag::FakeBatch)) fake_has_rows |= f.kind == FieldKind::SyntheticRows;
    EXPECT_TRUE(fake_has_rows);
}
