#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>
#include <zlib.h>

#include "spoofguard/autoencoder.hpp"
#include "spoofguard/model_io.hpp"

namespace sg = spoofguard;
namespace fs = std::filesystem;

namespace {

sg::AeModel sample_model() {
    sg::AeModel m = sg::init_model({20, 4, 3, 5}, 77);
    m.train_config.epochs = 123;
    m.train_config.sparsity_weight = 0.25;
    m.train_config.sparsity_target = 0.07;
    m.train_config.l2_weight = 0.002;
    m.train_config.seed = 0xdeadbeefcafe;
    m.train_config.latent = 4;
    m.train_config.hidden2 = 3;
    m.train_config.hidden3 = 5;
    return m;
}

// Re-stamps the trailing CRC after a deliberate header edit, so the test
// reaches the check it aims at instead of tripping the CRC first.
void restamp_crc(std::vector<unsigned char>& bytes) {
    const auto crc = static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size() - 4)));
    bytes[bytes.size() - 4] = static_cast<unsigned char>(crc & 0xff);
    bytes[bytes.size() - 3] = static_cast<unsigned char>((crc >> 8) & 0xff);
    bytes[bytes.size() - 2] = static_cast<unsigned char>((crc >> 16) & 0xff);
    bytes[bytes.size() - 1] = static_cast<unsigned char>((crc >> 24) & 0xff);
}

}  // namespace

TEST(ModelIo, SaveLoadBitIdentical) {
    const sg::AeModel m = sample_model();
    const sg::AeModel back = sg::load_model(sg::save_model(m));
    EXPECT_EQ(back.dims, m.dims);
    EXPECT_EQ(sg::pack_parameters(back), sg::pack_parameters(m));
    EXPECT_EQ(back.train_config.epochs, 123);
    EXPECT_DOUBLE_EQ(back.train_config.sparsity_weight, 0.25);
    EXPECT_DOUBLE_EQ(back.train_config.sparsity_target, 0.07);
    EXPECT_DOUBLE_EQ(back.train_config.l2_weight, 0.002);
    EXPECT_EQ(back.train_config.seed, 0xdeadbeefcafeULL);
}

TEST(ModelIo, SerializationIsDeterministic) {
    const sg::AeModel m = sample_model();
    EXPECT_EQ(sg::save_model(m), sg::save_model(m));
}

TEST(ModelIo, BadMagicRejected) {
    std::vector<unsigned char> bytes = sg::save_model(sample_model());
    bytes[1] = 'X';
    EXPECT_THROW(sg::load_model(bytes), sg::ModelFormatError);
}

TEST(ModelIo, CorruptedPayloadByteRejected) {
    std::vector<unsigned char> bytes = sg::save_model(sample_model());
    bytes[bytes.size() / 2] ^= 0x40;
    try {
        sg::load_model(bytes);
        FAIL() << "expected ModelFormatError";
    } catch (const sg::ModelFormatError& e) {
        EXPECT_NE(std::string(e.what()).find("CRC"), std::string::npos);
    }
}

TEST(ModelIo, UnsupportedVersionRejected) {
    std::vector<unsigned char> bytes = sg::save_model(sample_model());
    bytes[4] = 99;  // version field, little-endian low byte
    restamp_crc(bytes);
    try {
        sg::load_model(bytes);
        FAIL() << "expected ModelFormatError";
    } catch (const sg::ModelFormatError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST(ModelIo, TruncationRejected) {
    std::vector<unsigned char> bytes = sg::save_model(sample_model());
    bytes.resize(bytes.size() - 10);
    EXPECT_THROW(sg::load_model(bytes), sg::ModelFormatError);
    EXPECT_THROW(sg::load_model(bytes.data(), 3), sg::ModelFormatError);
}

TEST(ModelIo, ParameterBlobSizeMismatchRejected) {
    std::vector<unsigned char> bytes = sg::save_model(sample_model());
    bytes.erase(bytes.end() - 12, bytes.end() - 4);  // drop one f64 before the CRC
    restamp_crc(bytes);
    try {
        sg::load_model(bytes);
        FAIL() << "expected ModelFormatError";
    } catch (const sg::ModelFormatError& e) {
        EXPECT_NE(std::string(e.what()).find("size mismatch"), std::string::npos);
    }
}

TEST(ModelIo, FileRoundTrip) {
    const fs::path path = fs::temp_directory_path() / "sg_model_roundtrip.aemd";
    const sg::AeModel m = sample_model();
    sg::save_model_file(m, path);
    const sg::AeModel back = sg::load_model_file(path);
    EXPECT_EQ(sg::pack_parameters(back), sg::pack_parameters(m));
    fs::remove(path);
}

TEST(ModelIo, MissingFileRejectedWithPath) {
    try {
        sg::load_model_file("/nonexistent/sg_model.aemd");
        FAIL() << "expected ModelFormatError";
    } catch (const sg::ModelFormatError& e) {
        EXPECT_NE(std::string(e.what()).find("sg_model.aemd"), std::string::npos);
    }
}

TEST(ModelIo, DefaultScaleFileSizeMatchesLayout) {
    // 224x224 input, latent 16: the dominant blocks are the two D x 16
    // weight matrices, putting the file in the low-megabyte range.
    const sg::AeModel m = sg::init_model({224 * 224, 16, 16, 16}, 1);
    const std::vector<unsigned char> bytes = sg::save_model(m);
    const std::size_t expected =
        4 + 4 + 16 + 4 + 24 + 8 + static_cast<std::size_t>(m.parameter_count()) * 8 + 4;
    EXPECT_EQ(bytes.size(), expected);
    EXPECT_GT(bytes.size(), 10u * 1000 * 1000);
    EXPECT_LT(bytes.size(), 16u * 1000 * 1000);
}
