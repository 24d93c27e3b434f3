// Evaluation harness: rank-based ROC AUC, K-fold protocol over legitimate
// images with the spoof set reused whole as test data in every fold,
// SNR-overlap statistic, and per-chunk timing overheads.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spoofguard/autoencoder.hpp"
#include "spoofguard/chansim.hpp"
#include "spoofguard/detector.hpp"
#include "spoofguard/imaging.hpp"
#include "spoofguard/iq.hpp"
#include "spoofguard/model_io.hpp"
#include "spoofguard/rng.hpp"

namespace spoofguard {

/// Mann-Whitney AUC: fraction of (legit, spoof) pairs where the spoof score
/// is higher, ties counted 0.5. Computed via average ranks, O(n log n).
inline double roc_auc(const std::vector<double>& scores_legit,
                      const std::vector<double>& scores_spoof) {
    if (scores_legit.empty() || scores_spoof.empty())
        throw std::invalid_argument("roc_auc: both score sets must be non-empty");
    struct Tagged {
        double score;
        bool spoof;
    };
    std::vector<Tagged> all;
    all.reserve(scores_legit.size() + scores_spoof.size());
    for (double s : scores_legit) {
        if (!std::isfinite(s))
            throw std::invalid_argument("roc_auc: non-finite score");
        all.push_back({s, false});
    }
    for (double s : scores_spoof) {
        if (!std::isfinite(s))
            throw std::invalid_argument("roc_auc: non-finite score");
        all.push_back({s, true});
    }
    std::sort(all.begin(), all.end(),
              [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

    double rank_sum_spoof = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score)
            ++j;
        // 1-based average rank over the tie block [i, j)
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t t = i; t < j; ++t)
            if (all[t].spoof)
                rank_sum_spoof += avg_rank;
        i = j;
    }
    const double ns = static_cast<double>(scores_spoof.size());
    const double nl = static_cast<double>(scores_legit.size());
    const double u = rank_sum_spoof - ns * (ns + 1.0) / 2.0;
    return u / (ns * nl);
}

/// Quantile with linear interpolation between the two nearest order
/// statistics (h = (n-1)p convention).
inline double quantile_linear(std::vector<double> values, double p) {
    if (values.empty())
        throw std::invalid_argument("quantile_linear: empty input");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("quantile_linear: p must be in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size())
        return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

struct Quantiles {
    double q05 = 0.0;
    double q50 = 0.0;
    double q95 = 0.0;
};

inline Quantiles quantiles_of(const std::vector<double>& values) {
    Quantiles q;
    q.q05 = quantile_linear(values, 0.05);
    q.q50 = quantile_linear(values, 0.50);
    q.q95 = quantile_linear(values, 0.95);
    return q;
}

struct OverheadStats {
    double tau_img_ms = 0.0;  // histogram generation per chunk
    double tau_ae_ms = 0.0;   // classification per image
    std::size_t model_bytes = 0;
    std::size_t image_bytes = 0;
};

struct EvalReport {
    int k = 0;
    std::vector<double> fold_aucs;
    std::vector<double> fold_taus;
    Quantiles quantiles;
    std::size_t n_legit = 0;
    std::size_t n_spoof = 0;
    OverheadStats overhead;
    std::optional<double> snr_overlap;
    std::map<std::string, std::string> config;
};

struct KfoldConfig {
    int k = 5;
    TrainConfig train;       // per-fold seed is derived, see below
    std::uint64_t seed = 0;  // master: drives the shuffle and the fold seeds
};

namespace detail {

// Lemire multiply-shift bound; bias is < 2^-64 per draw, irrelevant here.
inline std::size_t bounded_index(std::mt19937_64& rng, std::size_t m) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng()) * static_cast<unsigned __int128>(m)) >> 64);
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[bounded_index(rng, i)]);
    return idx;
}

inline Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& src,
                                      const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(src.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        out.col(static_cast<Eigen::Index>(c)) = src.col(static_cast<Eigen::Index>(cols[c]));
    return out;
}

}  // namespace detail

/// K-fold over the legitimate batch: shuffle once (seeded), split into k
/// contiguous folds (first n%k folds one image larger), train on the other
/// k-1 folds with a per-fold derived seed, score the held-out legit fold and
/// the whole spoof batch, AUC per fold. `trainer(train_batch, fold_seed)`
/// must return the fitted model; tests inject cheap stand-ins through it.
template <typename Trainer>
EvalReport kfold_eval_with(const Eigen::MatrixXd& legit_batch, const Eigen::MatrixXd& spoof_batch,
                           const KfoldConfig& cfg, Trainer&& trainer) {
    if (cfg.k < 2)
        throw std::invalid_argument("kfold_eval: k must be >= 2");
    const auto m = static_cast<std::size_t>(legit_batch.cols());
    if (m < static_cast<std::size_t>(cfg.k))
        throw std::invalid_argument("kfold_eval: fewer legitimate images than folds");
    if (spoof_batch.cols() < 1)
        throw std::invalid_argument("kfold_eval: spoof set is empty");
    if (legit_batch.rows() != spoof_batch.rows())
        throw std::invalid_argument("kfold_eval: legit/spoof image dimensions differ");

    const std::vector<std::size_t> order = detail::shuffled_indices(m, derive_seed(cfg.seed, 0));
    const std::size_t base = m / static_cast<std::size_t>(cfg.k);
    const std::size_t rem = m % static_cast<std::size_t>(cfg.k);

    EvalReport report;
    report.k = cfg.k;
    report.n_legit = m;
    report.n_spoof = static_cast<std::size_t>(spoof_batch.cols());

    std::size_t start = 0;
    for (int f = 0; f < cfg.k; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
        std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(start + size));
        std::vector<std::size_t> train_idx;
        train_idx.reserve(m - size);
        train_idx.insert(train_idx.end(), order.begin(),
                         order.begin() + static_cast<std::ptrdiff_t>(start));
        train_idx.insert(train_idx.end(), order.begin() + static_cast<std::ptrdiff_t>(start + size),
                         order.end());
        start += size;
        if (train_idx.size() < 2)
            throw std::invalid_argument("kfold_eval: fold " + std::to_string(f) +
                                        " leaves fewer than 2 training images");

        const Eigen::MatrixXd train_batch = detail::gather_columns(legit_batch, train_idx);
        const AeModel model = trainer(train_batch, derive_seed(cfg.seed, static_cast<std::uint64_t>(f) + 1));

        const std::vector<double> train_errors = batch_mse(model, train_batch);
        report.fold_taus.push_back(fit_threshold(train_errors).tau);

        const std::vector<double> legit_scores =
            batch_mse(model, detail::gather_columns(legit_batch, test_idx));
        const std::vector<double> spoof_scores = batch_mse(model, spoof_batch);
        report.fold_aucs.push_back(roc_auc(legit_scores, spoof_scores));
    }
    report.quantiles = quantiles_of(report.fold_aucs);
    return report;
}

inline EvalReport kfold_eval(const Eigen::MatrixXd& legit_batch, const Eigen::MatrixXd& spoof_batch,
                             const KfoldConfig& cfg) {
    return kfold_eval_with(legit_batch, spoof_batch, cfg,
                           [&cfg](const Eigen::MatrixXd& batch, std::uint64_t fold_seed) {
                               TrainConfig tc = cfg.train;
                               tc.seed = fold_seed;
                               return train(batch, tc);
                           });
}

inline EvalReport kfold_eval(const std::vector<HistogramImage>& legit,
                             const std::vector<HistogramImage>& spoof, const KfoldConfig& cfg) {
    return kfold_eval(images_to_batch(legit), images_to_batch(spoof), cfg);
}

/// Fraction of spoofed chunks whose SNR falls inside the [min, max] interval
/// of the legitimate chunk SNRs (endpoints inclusive). Note the inversion of
/// the usual "outside" phrasing; reports carry this value as "overlap".
inline double snr_overlap(const std::vector<IqChunk>& legit_chunks,
                          const std::vector<IqChunk>& spoof_chunks) {
    if (legit_chunks.empty() || spoof_chunks.empty())
        throw std::invalid_argument("snr_overlap: both chunk sets must be non-empty");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const IqChunk& c : legit_chunks) {
        const double snr = chunk_snr_db(c);
        lo = std::min(lo, snr);
        hi = std::max(hi, snr);
    }
    std::size_t inside = 0;
    for (const IqChunk& c : spoof_chunks) {
        const double snr = chunk_snr_db(c);
        if (snr >= lo && snr <= hi)
            ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(spoof_chunks.size());
}

namespace detail {

inline double median_ms(std::vector<double>& samples_ns) {
    std::sort(samples_ns.begin(), samples_ns.end());
    const std::size_t n = samples_ns.size();
    const double mid = (n % 2 == 1) ? samples_ns[n / 2]
                                    : 0.5 * (samples_ns[n / 2 - 1] + samples_ns[n / 2]);
    return mid / 1e6;
}

}  // namespace detail

/// Wall-clock medians over `reps` repetitions: histogram generation per chunk
/// and classification per image, plus persisted artifact byte sizes.
inline OverheadStats measure_overhead(const DetectorState& state, const IqChunk& chunk,
                                      int reps = 1000) {
    if (reps < 1)
        throw std::invalid_argument("measure_overhead: reps must be >= 1");
    check_compatible(state.model, state.grid);
    using clock = std::chrono::steady_clock;

    OverheadStats stats;
    double sink = 0.0;  // keeps the measured work observable
    std::vector<double> img_ns(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clock::now();
        const HistogramImage img = make_histogram(chunk, state.grid);
        const auto t1 = clock::now();
        sink += img.pixels[0];
        img_ns[static_cast<std::size_t>(r)] =
            std::chrono::duration<double, std::nano>(t1 - t0).count();
    }
    stats.tau_img_ms = detail::median_ms(img_ns);

    const HistogramImage img = make_histogram(chunk, state.grid);
    std::vector<double> ae_ns(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clock::now();
        const Verdict v = classify(state, img);
        const auto t1 = clock::now();
        sink += v.mse;
        ae_ns[static_cast<std::size_t>(r)] =
            std::chrono::duration<double, std::nano>(t1 - t0).count();
    }
    stats.tau_ae_ms = detail::median_ms(ae_ns);
    if (!std::isfinite(sink))
        throw std::runtime_error("measure_overhead: non-finite work product");

    stats.model_bytes = save_model(state.model).size();
    stats.image_bytes = pgm_byte_size(state.grid);
    return stats;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["k"] = r.k;
    j["fold_aucs"] = r.fold_aucs;
    j["fold_taus"] = r.fold_taus;
    j["quantiles"] = {{"q05", r.quantiles.q05}, {"q50", r.quantiles.q50}, {"q95", r.quantiles.q95}};
    j["n_legit"] = r.n_legit;
    j["n_spoof"] = r.n_spoof;
    j["overhead"] = {{"tau_img_ms", r.overhead.tau_img_ms},
                     {"tau_ae_ms", r.overhead.tau_ae_ms},
                     {"model_bytes", r.overhead.model_bytes},
                     {"image_bytes", r.overhead.image_bytes}};
    if (r.snr_overlap)
        j["snr_overlap"] = *r.snr_overlap;
    j["config"] = r.config;
    return j;
}

inline std::string report_to_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "fold,auc,tau\n";
    os << std::setprecision(17);
    for (std::size_t f = 0; f < r.fold_aucs.size(); ++f) {
        os << f << ',' << r.fold_aucs[f] << ',';
        if (f < r.fold_taus.size())
            os << r.fold_taus[f];
        os << '\n';
    }
    return os.str();
}

inline std::string report_to_text(const EvalReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "K-fold ROC AUC evaluation\n";
    os << "  folds:              " << r.k << '\n';
    os << "  legitimate images:  " << r.n_legit << '\n';
    os << "  spoofed images:     " << r.n_spoof << '\n';
    os << "  fold AUC:          ";
    for (double a : r.fold_aucs)
        os << ' ' << a;
    os << '\n';
    os << "  AUC quantiles:      q05=" << r.quantiles.q05 << "  q50=" << r.quantiles.q50
       << "  q95=" << r.quantiles.q95 << '\n';
    if (r.snr_overlap)
        os << "  SNR overlap:        " << *r.snr_overlap
           << " (fraction of spoofed chunk SNRs inside the legitimate [min,max] interval)\n";
    os << "Overhead\n";
    os << "  image generation:   " << r.overhead.tau_img_ms << " ms/chunk\n";
    os << "  classification:     " << r.overhead.tau_ae_ms << " ms/image\n";
    os << "  model size:         " << r.overhead.model_bytes << " bytes\n";
    os << "  image size:         " << r.overhead.image_bytes << " bytes\n";
    if (!r.config.empty()) {
        os << "Config\n";
        for (const auto& [key, value] : r.config)
            os << "  " << key << " = " << value << '\n';
    }
    return os.str();
}

}  // namespace spoofguard
