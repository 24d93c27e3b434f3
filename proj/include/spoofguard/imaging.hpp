// Constellation imaging: bins an IQ chunk onto a fixed P x Q grid and turns
// the tile counts into an 8-bit grayscale image (counts above 255 saturate).
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spoofguard/iq.hpp"

namespace spoofguard {

/// Binning geometry. Bin edges along I are b[j] = i_min + j*(i_max-i_min)/p
/// for j = 0..p (analogous along Q). Bins are half-open [b[j], b[j+1]) except
/// the last one, which includes its top edge.
struct GridSpec {
    int p = 224;  // bin count along I
    int q = 224;  // bin count along Q
    double i_min = -1.5;
    double i_max = 1.5;
    double q_min = -1.5;
    double q_max = 1.5;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

    int bins() const { return p * q; }

    void validate() const {
        if (p < 1 || q < 1)
            throw std::invalid_argument("GridSpec: bin counts must be >= 1");
        if (!(i_min < i_max) || !(q_min < q_max))
            throw std::invalid_argument("GridSpec: empty axis range");
    }

    std::vector<double> i_edges() const { return edges(i_min, i_max, p); }
    std::vector<double> q_edges() const { return edges(q_min, q_max, q); }

private:
    static std::vector<double> edges(double lo, double hi, int n) {
        std::vector<double> e(static_cast<std::size_t>(n) + 1);
        for (int j = 0; j <= n; ++j)
            e[static_cast<std::size_t>(j)] = lo + static_cast<double>(j) * (hi - lo) / n;
        return e;
    }
};

/// Untruncated per-tile counts. Tiles are stored row-major with the Q axis
/// as rows: index = q_bin * p + i_bin.
struct BinCounts {
    std::vector<std::uint32_t> counts;
    std::uint32_t out_of_range = 0;
};

/// 8-bit grayscale constellation image plus its provenance counters.
/// Pixel layout matches BinCounts: index = q_bin * p + i_bin.
struct HistogramImage {
    std::vector<std::uint8_t> pixels;
    GridSpec grid;
    std::uint32_t n_source = 0;        // samples in the source chunk
    std::uint32_t n_out_of_range = 0;  // samples that fell outside the grid

    std::uint8_t at(int i_bin, int q_bin) const {
        return pixels[static_cast<std::size_t>(q_bin) * static_cast<std::size_t>(grid.p) +
                      static_cast<std::size_t>(i_bin)];
    }
};

namespace detail {

// Locates the bin of v against sorted edges, or -1 when out of range. A value
// exactly on the top edge belongs to the last bin; every interior edge opens
// the bin to its right.
inline int find_bin(const std::vector<double>& edges, double v) {
    if (v < edges.front())
        return -1;
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    if (it == edges.end())
        return v == edges.back() ? static_cast<int>(edges.size()) - 2 : -1;
    return static_cast<int>(it - edges.begin()) - 1;
}

}  // namespace detail

/// Raw tile counts for a chunk: how many samples land in each grid tile.
/// Samples outside the grid on either axis are tallied separately, never
/// clamped into edge tiles. counts sum + out_of_range == chunk size.
inline BinCounts count_samples(const IqChunk& c, const GridSpec& g) {
    g.validate();
    if (c.samples.empty())
        throw std::invalid_argument("count_samples: empty chunk");
    const std::vector<double> ei = g.i_edges();
    const std::vector<double> eq = g.q_edges();
    BinCounts bc;
    bc.counts.assign(static_cast<std::size_t>(g.bins()), 0);
    for (const IqSample& s : c.samples) {
        const int bi = detail::find_bin(ei, s.i);
        const int bq = detail::find_bin(eq, s.q);
        if (bi < 0 || bq < 0) {
            ++bc.out_of_range;
            continue;
        }
        ++bc.counts[static_cast<std::size_t>(bq) * static_cast<std::size_t>(g.p) +
                    static_cast<std::size_t>(bi)];
    }
    return bc;
}

/// Builds the grayscale image for a chunk: per-tile counts saturated at 255.
inline HistogramImage make_histogram(const IqChunk& c, const GridSpec& g) {
    const BinCounts bc = count_samples(c, g);
    HistogramImage img;
    img.grid = g;
    img.n_source = static_cast<std::uint32_t>(c.samples.size());
    img.n_out_of_range = bc.out_of_range;
    img.pixels.resize(bc.counts.size());
    std::transform(bc.counts.begin(), bc.counts.end(), img.pixels.begin(),
                   [](std::uint32_t n) { return static_cast<std::uint8_t>(std::min<std::uint32_t>(n, 255)); });
    return img;
}

/// Flattens an image to a real vector in [0,1]: row-major pixels / 255.
inline std::vector<double> normalize_image(const HistogramImage& img) {
    std::vector<double> x(img.pixels.size());
    std::transform(img.pixels.begin(), img.pixels.end(), x.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v) / 255.0; });
    return x;
}

/// Writes a binary PGM (P5): width = p, height = q, maxval 255, pixels
/// row-major top row first.
inline void export_pgm(const HistogramImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    out << "P5\n" << img.grid.p << " " << img.grid.q << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out)
        throw std::runtime_error(path.string() + ": write failed");
}

/// Size in bytes of the PGM file export_pgm would produce.
inline std::size_t pgm_byte_size(const GridSpec& g) {
    const std::string header =
        "P5\n" + std::to_string(g.p) + " " + std::to_string(g.q) + "\n255\n";
    return header.size() + static_cast<std::size_t>(g.bins());
}

/// A PGM file read back from disk. The binning geometry is not part of the
/// format, so only the raster survives a round-trip.
struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

inline PgmImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error(path.string() + ": cannot open");
    std::string magic;
    int width = 0, height = 0, maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || width <= 0 || height <= 0 || maxval != 255)
        throw std::runtime_error(path.string() + ": not a maxval-255 binary PGM");
    in.get();  // single whitespace byte after the header
    PgmImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error(path.string() + ": truncated pixel data");
    return img;
}

}  // namespace spoofguard
