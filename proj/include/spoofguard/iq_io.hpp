// Capture file I/O. `.iq` files hold interleaved 32-bit IEEE-754
// little-endian I,Q pairs; an optional `.meta` sidecar carries UTF-8
// key=value lines (label, source, sample_rate, message boundaries).
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spoofguard/iq.hpp"

namespace spoofguard {

/// Parse or serialization failure; the message carries file/offset context.
class IqParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kIqRecordBytes = 8;  // two float32 per sample

namespace detail {

inline float read_f32_le(const unsigned char* p) {
    std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                      static_cast<std::uint32_t>(p[1]) << 8 |
                      static_cast<std::uint32_t>(p[2]) << 16 |
                      static_cast<std::uint32_t>(p[3]) << 24;
    return std::bit_cast<float>(u);
}

inline void write_f32_le(float v, std::string& out) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>((u >> 8) & 0xff));
    out.push_back(static_cast<char>((u >> 16) & 0xff));
    out.push_back(static_cast<char>((u >> 24) & 0xff));
}

}  // namespace detail

/// Decodes a raw capture byte buffer into samples. Throws IqParseError on a
/// truncated trailing record (reporting its byte offset) or on non-finite
/// component values (reporting the sample index).
inline std::vector<IqSample> parse_iq_bytes(const unsigned char* data, std::size_t len,
                                            const std::string& context = {}) {
    const std::string where = context.empty() ? std::string{} : context + ": ";
    if (len % kIqRecordBytes != 0) {
        const std::size_t offset = (len / kIqRecordBytes) * kIqRecordBytes;
        throw IqParseError(where + "truncated record at offset " + std::to_string(offset));
    }
    std::vector<IqSample> samples;
    samples.reserve(len / kIqRecordBytes);
    for (std::size_t k = 0; k * kIqRecordBytes < len; ++k) {
        IqSample s;
        s.i = detail::read_f32_le(data + k * kIqRecordBytes);
        s.q = detail::read_f32_le(data + k * kIqRecordBytes + 4);
        if (!is_finite(s))
            throw IqParseError(where + "non-finite sample at index " + std::to_string(k));
        samples.push_back(s);
    }
    return samples;
}

/// Serializes samples back to the wire format. parse -> serialize is
/// byte-identical.
inline std::string serialize_iq(const std::vector<IqSample>& samples) {
    std::string out;
    out.reserve(samples.size() * kIqRecordBytes);
    for (const IqSample& s : samples) {
        detail::write_f32_le(s.i, out);
        detail::write_f32_le(s.q, out);
    }
    return out;
}

inline std::vector<IqSample> parse_iq_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IqParseError(path.string() + ": cannot open capture file");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_iq_bytes(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
                          path.string());
}

inline void write_iq_file(const std::filesystem::path& path, const std::vector<IqSample>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IqParseError(path.string() + ": cannot open capture file for writing");
    const std::string bytes = serialize_iq(samples);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IqParseError(path.string() + ": write failed");
}

/// Sidecar metadata for a capture. `boundaries` lists sample indices where a
/// new message starts; chunking never straddles them when provided.
struct CaptureMeta {
    Label label = Label::unknown;
    std::string source;
    double sample_rate = 0.0;  // Hz; 0 = unspecified
    std::vector<std::size_t> boundaries;
};

inline std::filesystem::path meta_path_for(const std::filesystem::path& iq_path) {
    std::filesystem::path p = iq_path;
    p.replace_extension(".meta");
    return p;
}

inline CaptureMeta parse_meta_text(const std::string& text, const std::string& context = {}) {
    const std::string where = context.empty() ? std::string{} : context + ": ";
    CaptureMeta meta;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw IqParseError(where + "malformed metadata line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "label") {
            meta.label = label_from_string(value);
        } else if (key == "source") {
            meta.source = value;
        } else if (key == "sample_rate") {
            meta.sample_rate = std::stod(value);
        } else if (key == "boundaries") {
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ','))
                if (!item.empty())
                    meta.boundaries.push_back(static_cast<std::size_t>(std::stoull(item)));
        }
        // unknown keys are ignored for forward compatibility
    }
    return meta;
}

inline std::string serialize_meta(const CaptureMeta& meta) {
    std::ostringstream out;
    out << "label=" << to_string(meta.label) << "\n";
    if (!meta.source.empty())
        out << "source=" << meta.source << "\n";
    if (meta.sample_rate > 0.0)
        out << "sample_rate=" << meta.sample_rate << "\n";
    if (!meta.boundaries.empty()) {
        out << "boundaries=";
        for (std::size_t k = 0; k < meta.boundaries.size(); ++k)
            out << (k ? "," : "") << meta.boundaries[k];
        out << "\n";
    }
    return out.str();
}

inline CaptureMeta parse_meta_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IqParseError(path.string() + ": cannot open metadata file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_meta_text(text, path.string());
}

inline void write_meta_file(const std::filesystem::path& path, const CaptureMeta& meta) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IqParseError(path.string() + ": cannot open metadata file for writing");
    out << serialize_meta(meta);
    if (!out)
        throw IqParseError(path.string() + ": write failed");
}

}  // namespace spoofguard
