// Raw IQ sample handling: chunking a sample stream into fixed-size windows
// and computing per-sample / per-chunk SNR estimates.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spoofguard {

/// Provenance of a chunk of samples.
enum class Label : std::uint8_t { legitimate, spoofed, unknown };

inline const char* to_string(Label l) {
    switch (l) {
        case Label::legitimate: return "legitimate";
        case Label::spoofed: return "spoofed";
        default: return "unknown";
    }
}

inline Label label_from_string(const std::string& s) {
    if (s == "legitimate") return Label::legitimate;
    if (s == "spoofed") return Label::spoofed;
    if (s == "unknown") return Label::unknown;
    throw std::invalid_argument("unrecognized label: " + s);
}

/// One complex baseband sample. Stored as 32-bit floats, matching the
/// capture file format, so parse/serialize round-trips are lossless.
struct IqSample {
    float i = 0.0f;
    float q = 0.0f;

    friend bool operator==(const IqSample&, const IqSample&) = default;
};

inline bool is_finite(const IqSample& s) {
    return std::isfinite(s.i) && std::isfinite(s.q);
}

/// A fixed-length window of samples, the unit of classification.
struct IqChunk {
    std::vector<IqSample> samples;
    Label label = Label::unknown;
    std::string source_id;

    std::size_t size() const { return samples.size(); }
};

/// Output clamp for the SNR estimate, in dB. The geometric formula is
/// singular at (1,0); flooring both power terms and clamping the result
/// keeps the statistic defined for every sample.
inline constexpr double kSnrClampDb = 120.0;
inline constexpr double kSnrPowerFloor = 1e-12;

/// Geometric per-sample SNR estimate in dB: the power of the sample
/// relative to its squared distance from the unit reference point (1,0).
/// Both power terms are floored at 1e-12 and the result is clamped to
/// [-120, 120] dB.
inline double sample_snr_db(const IqSample& s) {
    const double i = s.i;
    const double q = s.q;
    const double signal = std::max(i * i + q * q, kSnrPowerFloor);
    const double noise = std::max((i - 1.0) * (i - 1.0) + q * q, kSnrPowerFloor);
    const double snr = 10.0 * std::log10(signal / noise);
    return std::clamp(snr, -kSnrClampDb, kSnrClampDb);
}

/// Per-chunk SNR: arithmetic mean of the per-sample values in the dB domain.
inline double chunk_snr_db(const IqChunk& c) {
    if (c.samples.empty())
        throw std::invalid_argument("chunk_snr_db: empty chunk");
    double sum = 0.0;
    for (const IqSample& s : c.samples)
        sum += sample_snr_db(s);
    return sum / static_cast<double>(c.samples.size());
}

/// Splits a sample stream into non-overlapping chunks of exactly n samples,
/// preserving order. A trailing remainder shorter than n is discarded, never
/// zero-padded; padding would fabricate constellation mass at the origin.
inline std::vector<IqChunk> chunk_samples(const std::vector<IqSample>& samples,
                                          std::size_t n,
                                          Label label = Label::unknown,
                                          std::string source_id = {}) {
    if (n == 0)
        throw std::invalid_argument("chunk_samples: chunk size must be >= 1");
    std::vector<IqChunk> out;
    out.reserve(samples.size() / n);
    for (std::size_t begin = 0; begin + n <= samples.size(); begin += n) {
        IqChunk c;
        c.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                         samples.begin() + static_cast<std::ptrdiff_t>(begin + n));
        c.label = label;
        c.source_id = source_id;
        out.push_back(std::move(c));
    }
    return out;
}

/// Chunking variant that honors message boundaries: `boundaries` lists the
/// sample indices where a new message starts, and no chunk straddles one.
/// Each segment is chunked independently with its remainder discarded.
inline std::vector<IqChunk> chunk_samples_bounded(const std::vector<IqSample>& samples,
                                                  std::size_t n,
                                                  const std::vector<std::size_t>& boundaries,
                                                  Label label = Label::unknown,
                                                  std::string source_id = {}) {
    if (n == 0)
        throw std::invalid_argument("chunk_samples_bounded: chunk size must be >= 1");
    std::vector<std::size_t> cuts;
    cuts.push_back(0);
    for (std::size_t b : boundaries) {
        if (b > samples.size())
            throw std::invalid_argument("chunk_samples_bounded: boundary past end of stream");
        cuts.push_back(b);
    }
    cuts.push_back(samples.size());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<IqChunk> out;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        std::vector<IqSample> segment(samples.begin() + static_cast<std::ptrdiff_t>(cuts[k]),
                                      samples.begin() + static_cast<std::ptrdiff_t>(cuts[k + 1]));
        auto chunks = chunk_samples(segment, n, label, source_id);
        for (auto& c : chunks)
            out.push_back(std::move(c));
    }
    return out;
}

}  // namespace spoofguard
