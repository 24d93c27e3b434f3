#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spoofguard/iq.hpp"
#include "spoofguard/iq_io.hpp"

namespace sg = spoofguard;

namespace {

std::string bytes_of(std::initializer_list<unsigned char> b) {
    return std::string(b.begin(), b.end());
}

std::vector<sg::IqSample> parse(const std::string& bytes) {
    return sg::parse_iq_bytes(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
}

}  // namespace

TEST(IqParse, TwoRecords) {
    // (1.0, 0.0), (0.0, 1.0) as float32 LE, hand-assembled
    const std::string bytes = bytes_of({0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x00,
                                        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3f});
    const auto samples = parse(bytes);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(samples[0].i, 1.0f);
    EXPECT_EQ(samples[0].q, 0.0f);
    EXPECT_EQ(samples[1].i, 0.0f);
    EXPECT_EQ(samples[1].q, 1.0f);
}

TEST(IqParse, EmptyInput) {
    EXPECT_TRUE(parse({}).empty());
}

TEST(IqParse, TruncatedRecordAtOffset16) {
    const std::string bytes(17, '\0');
    try {
        parse(bytes);
        FAIL() << "expected IqParseError";
    } catch (const sg::IqParseError& e) {
        EXPECT_NE(std::string(e.what()).find("truncated record at offset 16"), std::string::npos);
    }
}

TEST(IqParse, NonFiniteSampleIndexed) {
    // second record carries +inf in I (0x7f800000)
    const std::string bytes = bytes_of({0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x00,
                                        0x00, 0x00, 0x80, 0x7f, 0x00, 0x00, 0x00, 0x00});
    try {
        parse(bytes);
        FAIL() << "expected IqParseError";
    } catch (const sg::IqParseError& e) {
        EXPECT_NE(std::string(e.what()).find("non-finite sample at index 1"), std::string::npos);
    }
}

TEST(IqParse, SerializeRoundTripIsByteIdentical) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
    std::vector<sg::IqSample> samples(257);
    for (auto& s : samples)
        s = {dist(rng), dist(rng)};
    const std::string bytes = sg::serialize_iq(samples);
    EXPECT_EQ(bytes.size(), samples.size() * sg::kIqRecordBytes);
    EXPECT_EQ(sg::serialize_iq(parse(bytes)), bytes);
}

TEST(Chunking, FloorDivision) {
    std::vector<sg::IqSample> samples(2500, {0.1f, 0.2f});
    const auto chunks = sg::chunk_samples(samples, 1000);
    ASSERT_EQ(chunks.size(), 2u);
    EXPECT_EQ(chunks[0].samples.size(), 1000u);
    EXPECT_EQ(chunks[1].samples.size(), 1000u);
}

TEST(Chunking, ExactFit) {
    std::vector<sg::IqSample> samples(1000);
    EXPECT_EQ(sg::chunk_samples(samples, 1000).size(), 1u);
}

TEST(Chunking, TooShort) {
    std::vector<sg::IqSample> samples(999);
    EXPECT_TRUE(sg::chunk_samples(samples, 1000).empty());
}

TEST(Chunking, ZeroSizeRejected) {
    std::vector<sg::IqSample> samples(10);
    EXPECT_THROW(sg::chunk_samples(samples, 0), std::invalid_argument);
}

TEST(Chunking, PrefixPartition) {
    std::mt19937_64 rng(3);
    std::vector<sg::IqSample> samples(1237);
    for (std::size_t k = 0; k < samples.size(); ++k)
        samples[k] = {static_cast<float>(k), static_cast<float>(rng() % 100)};
    const std::size_t n = 100;
    const auto chunks = sg::chunk_samples(samples, n);
    ASSERT_EQ(chunks.size(), 12u);
    std::size_t pos = 0;
    for (const auto& c : chunks)
        for (const auto& s : c.samples) {
            EXPECT_EQ(s.i, samples[pos].i);
            EXPECT_EQ(s.q, samples[pos].q);
            ++pos;
        }
    EXPECT_EQ(pos, 1200u);
}

TEST(Chunking, BoundariesNeverStraddled) {
    std::vector<sg::IqSample> samples(10);
    for (std::size_t k = 0; k < samples.size(); ++k)
        samples[k] = {static_cast<float>(k), 0.0f};
    const auto chunks = sg::chunk_samples_bounded(samples, 3, {5});
    ASSERT_EQ(chunks.size(), 2u);
    EXPECT_EQ(chunks[0].samples.front().i, 0.0f);
    EXPECT_EQ(chunks[0].samples.back().i, 2.0f);
    EXPECT_EQ(chunks[1].samples.front().i, 5.0f);
    EXPECT_EQ(chunks[1].samples.back().i, 7.0f);
}

TEST(Snr, EquidistantPointIsZeroDb) {
    EXPECT_DOUBLE_EQ(sg::sample_snr_db({0.5f, 0.0f}), 0.0);
}

TEST(Snr, DirectEvaluation) {
    EXPECT_NEAR(sg::sample_snr_db({2.0f, 0.0f}), 10.0 * std::log10(4.0), 1e-12);
    EXPECT_NEAR(sg::sample_snr_db({2.0f, 0.0f}), 6.0206, 1e-4);
}

TEST(Snr, SingularityClampsTo120) {
    EXPECT_DOUBLE_EQ(sg::sample_snr_db({1.0f, 0.0f}), 120.0);
}

TEST(Snr, ReflectionInvariance) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> dist(-2.0f, 2.0f);
    for (int k = 0; k < 100; ++k) {
        const float i = dist(rng), q = dist(rng);
        EXPECT_DOUBLE_EQ(sg::sample_snr_db({i, q}), sg::sample_snr_db({i, -q}));
    }
}

TEST(Snr, BisectorIsExactlyZero) {
    for (float q : {0.0f, 0.25f, -1.0f, 3.5f})
        EXPECT_DOUBLE_EQ(sg::sample_snr_db({0.5f, q}), 0.0);
}

TEST(Snr, ChunkMeanOfConstants) {
    sg::IqChunk c;
    c.samples.assign(40, {0.5f, 0.0f});
    EXPECT_DOUBLE_EQ(sg::chunk_snr_db(c), 0.0);
}

TEST(Snr, ChunkMeanOfTwoValues) {
    sg::IqChunk equal;
    equal.samples = {{2.0f, 0.0f}, {2.0f, 0.0f}};
    EXPECT_NEAR(sg::chunk_snr_db(equal), 6.0206, 1e-4);

    sg::IqChunk mixed;
    mixed.samples = {{0.5f, 0.0f}, {2.0f, 0.0f}};
    EXPECT_NEAR(sg::chunk_snr_db(mixed), 3.0103, 1e-4);
}

TEST(Snr, EmptyChunkRejected) {
    EXPECT_THROW(sg::chunk_snr_db(sg::IqChunk{}), std::invalid_argument);
}

TEST(Meta, RoundTrip) {
    sg::CaptureMeta meta;
    meta.label = sg::Label::spoofed;
    meta.source = "capture-42";
    meta.sample_rate = 25000.0;
    meta.boundaries = {100, 2000, 35000};
    const sg::CaptureMeta back = sg::parse_meta_text(sg::serialize_meta(meta));
    EXPECT_EQ(back.label, sg::Label::spoofed);
    EXPECT_EQ(back.source, "capture-42");
    EXPECT_DOUBLE_EQ(back.sample_rate, 25000.0);
    EXPECT_EQ(back.boundaries, meta.boundaries);
}

TEST(Meta, IgnoresCommentsBlanksAndUnknownKeys) {
    const auto meta = sg::parse_meta_text("# comment\n\nlabel=legitimate\nfuture_key=x\n");
    EXPECT_EQ(meta.label, sg::Label::legitimate);
}

TEST(Meta, MalformedLineRejected) {
    EXPECT_THROW(sg::parse_meta_text("label legitimate\n"), sg::IqParseError);
}

TEST(Meta, PathDerivation) {
    EXPECT_EQ(sg::meta_path_for("data/cap.iq"), std::filesystem::path("data/cap.meta"));
}
