// Model persistence. Binary layout, all integers little-endian:
//
//   magic "AEMD" | u32 version | u32 input,latent,hidden2,hidden3
//   | u32 epochs | f64 sparsity_weight | f64 sparsity_target | f64 l2_weight
//   | u64 seed | f64[parameter_count] canonical parameter blob
//   | u32 CRC32 of all preceding bytes
#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>
#include <zlib.h>

#include "spoofguard/autoencoder.hpp"

namespace spoofguard {

class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr char kModelMagic[4] = {'A', 'E', 'M', 'D'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffULL));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
public:
    Reader(const unsigned char* data, std::size_t len) : data_(data), len_(len) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(data_[at_]) |
                          static_cast<std::uint32_t>(data_[at_ + 1]) << 8 |
                          static_cast<std::uint32_t>(data_[at_ + 2]) << 16 |
                          static_cast<std::uint32_t>(data_[at_ + 3]) << 24;
        at_ += 4;
        return v;
    }

    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        const std::uint64_t hi = u32();
        return lo | (hi << 32);
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t position() const { return at_; }
    std::size_t remaining() const { return len_ - at_; }

private:
    void need(std::size_t n) const {
        if (len_ - at_ < n)
            throw ModelFormatError("model file truncated at offset " + std::to_string(at_));
    }

    const unsigned char* data_;
    std::size_t len_;
    std::size_t at_ = 0;
};

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t len) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

}  // namespace detail

/// Serializes a model (dims, hyperparameters, parameter blob, CRC).
inline std::vector<unsigned char> save_model(const AeModel& m) {
    std::vector<unsigned char> out;
    out.reserve(48 + static_cast<std::size_t>(m.parameter_count()) * 8 + 4);
    out.insert(out.end(), kModelMagic, kModelMagic + 4);
    detail::put_u32(out, kModelVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(m.dims.input));
    detail::put_u32(out, static_cast<std::uint32_t>(m.dims.latent));
    detail::put_u32(out, static_cast<std::uint32_t>(m.dims.hidden2));
    detail::put_u32(out, static_cast<std::uint32_t>(m.dims.hidden3));
    detail::put_u32(out, static_cast<std::uint32_t>(m.train_config.epochs));
    detail::put_f64(out, m.train_config.sparsity_weight);
    detail::put_f64(out, m.train_config.sparsity_target);
    detail::put_f64(out, m.train_config.l2_weight);
    detail::put_u64(out, m.train_config.seed);
    const Eigen::VectorXd theta = pack_parameters(m);
    for (Eigen::Index k = 0; k < theta.size(); ++k)
        detail::put_f64(out, theta[k]);
    detail::put_u32(out, detail::crc32_of(out.data(), out.size()));
    return out;
}

/// Parses a serialized model, validating magic, version, size, and CRC.
inline AeModel load_model(const unsigned char* data, std::size_t len) {
    if (len < 4 || !std::equal(kModelMagic, kModelMagic + 4, data))
        throw ModelFormatError("bad magic: not a model file");
    if (len < 8)
        throw ModelFormatError("model file truncated in header");
    const std::uint32_t stored_crc =
        static_cast<std::uint32_t>(data[len - 4]) | static_cast<std::uint32_t>(data[len - 3]) << 8 |
        static_cast<std::uint32_t>(data[len - 2]) << 16 |
        static_cast<std::uint32_t>(data[len - 1]) << 24;
    if (detail::crc32_of(data, len - 4) != stored_crc)
        throw ModelFormatError("model file CRC mismatch");

    detail::Reader r(data + 4, len - 8);  // past magic, before CRC
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw ModelFormatError("unsupported model version " + std::to_string(version));

    AeDims dims;
    dims.input = r.u32();
    dims.latent = r.u32();
    dims.hidden2 = r.u32();
    dims.hidden3 = r.u32();
    dims.validate();

    TrainConfig cfg;
    cfg.epochs = static_cast<int>(r.u32());
    cfg.sparsity_weight = r.f64();
    cfg.sparsity_target = r.f64();
    cfg.l2_weight = r.f64();
    cfg.seed = r.u64();
    cfg.latent = dims.latent;
    cfg.hidden2 = dims.hidden2;
    cfg.hidden3 = dims.hidden3;

    AeModel m = init_model(dims, 0);  // allocates the right shapes
    m.train_config = cfg;
    const auto want = static_cast<std::size_t>(m.parameter_count());
    if (r.remaining() != want * 8)
        throw ModelFormatError("parameter blob size mismatch (have " +
                               std::to_string(r.remaining()) + " bytes, expected " +
                               std::to_string(want * 8) + ")");
    Eigen::VectorXd theta(m.parameter_count());
    for (Eigen::Index k = 0; k < theta.size(); ++k)
        theta[k] = r.f64();
    unpack_parameters(m, theta);
    return m;
}

inline AeModel load_model(const std::vector<unsigned char>& bytes) {
    return load_model(bytes.data(), bytes.size());
}

inline void save_model_file(const AeModel& m, const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = save_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ModelFormatError(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ModelFormatError(path.string() + ": write failed");
}

inline AeModel load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ModelFormatError(path.string() + ": cannot open");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    try {
        return load_model(bytes.data(), bytes.size());
    } catch (const ModelFormatError& e) {
        throw ModelFormatError(path.string() + ": " + e.what());
    }
}

}  // namespace spoofguard
