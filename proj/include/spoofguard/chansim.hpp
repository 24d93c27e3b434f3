// Synthetic DQPSK channel. Four constellation points at {45,135,225,315}
// degrees times amplitude; impairments applied per sample in fixed order:
// Rician gain (finite K only), phase jitter, per-axis additive Gaussian noise.
// Generation is pure per (params, n): the same seed reproduces the chunk
// bit for bit. Gaussians come from an explicit Box-Muller on the raw engine
// output so the draw sequence does not depend on library internals.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spoofguard/iq.hpp"
#include "spoofguard/iq_io.hpp"
#include "spoofguard/rng.hpp"

namespace spoofguard {

struct ChannelParams {
    double noise_sigma = 0.0;   // per-axis Gaussian std
    double amplitude = 1.0;     // constellation radius
    double fading_k = std::numeric_limits<double>::infinity();  // Rician K; inf = no fading
    double phase_jitter = 0.0;  // radians std
    std::uint64_t seed = 0;

    void validate() const {
        if (!(noise_sigma >= 0.0))
            throw std::invalid_argument("ChannelParams: noise_sigma must be >= 0");
        if (!(amplitude > 0.0))
            throw std::invalid_argument("ChannelParams: amplitude must be > 0");
        if (!(fading_k >= 0.0))  // +inf admitted
            throw std::invalid_argument("ChannelParams: fading_k must be >= 0");
        if (!(phase_jitter >= 0.0))
            throw std::invalid_argument("ChannelParams: phase_jitter must be >= 0");
    }
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

// One standard normal per call; always consumes exactly two engine draws.
inline double gaussian(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

inline IqChunk gen_dqpsk_chunk(const ChannelParams& p, std::size_t n,
                               std::string source_id = "sim",
                               Label label = Label::unknown) {
    p.validate();
    if (n == 0)
        throw std::invalid_argument("gen_dqpsk_chunk: n must be >= 1");

    const bool fading = std::isfinite(p.fading_k);
    // Unit-mean-power complex gain: sqrt(K/(K+1)) LOS + scattered part.
    const double los = fading ? std::sqrt(p.fading_k / (p.fading_k + 1.0)) : 1.0;
    const double scatter = fading ? std::sqrt(1.0 / (2.0 * (p.fading_k + 1.0))) : 0.0;
    const double r = p.amplitude * std::numbers::sqrt2 / 2.0;  // |cos 45| * amplitude

    std::mt19937_64 rng(p.seed);
    IqChunk chunk;
    chunk.label = label;
    chunk.source_id = std::move(source_id);
    chunk.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t sym = rng() & 3;  // quadrant, uniform over 4
        double i = (sym == 0 || sym == 3) ? r : -r;
        double q = (sym == 0 || sym == 1) ? r : -r;
        if (fading) {
            const double gr = los + scatter * detail::gaussian(rng);
            const double gi = scatter * detail::gaussian(rng);
            const double ig = i * gr - q * gi;
            q = i * gi + q * gr;
            i = ig;
        }
        if (p.phase_jitter > 0.0) {
            const double theta = p.phase_jitter * detail::gaussian(rng);
            const double c = std::cos(theta), s = std::sin(theta);
            const double ir = i * c - q * s;
            q = i * s + q * c;
            i = ir;
        }
        if (p.noise_sigma > 0.0) {
            i += p.noise_sigma * detail::gaussian(rng);
            q += p.noise_sigma * detail::gaussian(rng);
        }
        chunk.samples.push_back({static_cast<float>(i), static_cast<float>(q)});
    }
    return chunk;
}

struct Dataset {
    std::vector<IqChunk> legit;
    std::vector<IqChunk> spoof;
};

namespace detail {

inline std::string chunk_name(std::size_t index) {
    std::ostringstream os;
    os << "chunk_" << std::setw(5) << std::setfill('0') << index;
    return os.str();
}

}  // namespace detail

/// Generates chunks_per_class chunks per class. Per-chunk seeds are derived
/// from the master seed (streams interleaved legit/spoof), so every chunk is
/// independent and the whole dataset is reproducible from one number.
inline Dataset gen_dataset(const ChannelParams& legit, const ChannelParams& spoof,
                           std::size_t chunks_per_class, std::size_t n,
                           std::uint64_t master_seed) {
    if (chunks_per_class == 0)
        throw std::invalid_argument("gen_dataset: chunks_per_class must be >= 1");
    legit.validate();
    spoof.validate();
    Dataset ds;
    ds.legit.reserve(chunks_per_class);
    ds.spoof.reserve(chunks_per_class);
    for (std::size_t c = 0; c < chunks_per_class; ++c) {
        ChannelParams pl = legit;
        pl.seed = derive_seed(master_seed, 2 * c);
        ds.legit.push_back(
            gen_dqpsk_chunk(pl, n, "sim-legit-" + detail::chunk_name(c), Label::legitimate));
        ChannelParams ps = spoof;
        ps.seed = derive_seed(master_seed, 2 * c + 1);
        ds.spoof.push_back(
            gen_dqpsk_chunk(ps, n, "sim-spoof-" + detail::chunk_name(c), Label::spoofed));
    }
    return ds;
}

namespace detail {

inline void export_class(const std::vector<IqChunk>& chunks, const std::filesystem::path& dir,
                         double sample_rate) {
    std::filesystem::create_directories(dir);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const std::filesystem::path iq_path = dir / (chunk_name(c) + ".iq");
        write_iq_file(iq_path, chunks[c].samples);
        CaptureMeta meta;
        meta.label = chunks[c].label;
        meta.source = chunks[c].source_id;
        meta.sample_rate = sample_rate;
        write_meta_file(meta_path_for(iq_path), meta);
    }
}

}  // namespace detail

/// Writes one .iq file + .meta sidecar per chunk under dir/legit and
/// dir/spoof. Re-ingesting through the capture parser reproduces every
/// sample bit for bit (float32 wire format end to end).
inline void export_dataset(const Dataset& ds, const std::filesystem::path& dir,
                           double sample_rate = 1.0) {
    detail::export_class(ds.legit, dir / "legit", sample_rate);
    detail::export_class(ds.spoof, dir / "spoof", sample_rate);
}

/// Parses one capture and cuts it into N-sample chunks, honoring boundary
/// markers from the sidecar when present. Label comes from the sidecar if it
/// has one, else fallback_label.
inline std::vector<IqChunk> load_capture(const std::filesystem::path& iq_path, std::size_t n,
                                         Label fallback_label = Label::unknown) {
    const std::vector<IqSample> samples = parse_iq_file(iq_path);
    Label label = fallback_label;
    std::vector<std::size_t> boundaries;
    const std::filesystem::path meta = meta_path_for(iq_path);
    if (std::filesystem::exists(meta)) {
        const CaptureMeta m = parse_meta_file(meta);
        if (m.label != Label::unknown)
            label = m.label;
        boundaries = m.boundaries;
    }
    const std::string source = iq_path.filename().string();
    if (!boundaries.empty())
        return chunk_samples_bounded(samples, n, boundaries, label, source);
    return chunk_samples(samples, n, label, source);
}

/// Loads every *.iq capture under dir (sorted by filename) and chunks it.
inline std::vector<IqChunk> load_class_dir(const std::filesystem::path& dir, std::size_t n,
                                           Label fallback_label) {
    if (!std::filesystem::is_directory(dir))
        throw IqParseError(dir.string() + ": not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".iq")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<IqChunk> chunks;
    for (const auto& f : files) {
        std::vector<IqChunk> part = load_capture(f, n, fallback_label);
        chunks.insert(chunks.end(), std::make_move_iterator(part.begin()),
                      std::make_move_iterator(part.end()));
    }
    return chunks;
}

/// Loads a dataset directory laid out as dir/legit/*.iq + dir/spoof/*.iq.
inline Dataset load_dataset(const std::filesystem::path& dir, std::size_t n) {
    Dataset ds;
    ds.legit = load_class_dir(dir / "legit", n, Label::legitimate);
    ds.spoof = load_class_dir(dir / "spoof", n, Label::spoofed);
    return ds;
}

}  // namespace spoofguard
