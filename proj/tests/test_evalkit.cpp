#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "spoofguard/evalkit.hpp"

namespace sg = spoofguard;

namespace {

// Reconstruction of a zero model is identically zero, so each 1-pixel image
// scores exactly its squared value; column constants become fold markers.
sg::AeModel zero_model(int input) {
    sg::AeModel m = sg::init_model({input, 2, 2, 2}, 5);
    sg::unpack_parameters(m, Eigen::VectorXd::Zero(m.parameter_count()));
    return m;
}

Eigen::MatrixXd marker_batch(const std::vector<double>& values) {
    Eigen::MatrixXd batch(1, static_cast<Eigen::Index>(values.size()));
    for (std::size_t j = 0; j < values.size(); ++j)
        batch(0, static_cast<Eigen::Index>(j)) = values[j];
    return batch;
}

// Single-sample chunk whose SNR in dB is t by construction: with Q = 0 and
// I = r/(r+1) the power ratio I^2/(I-1)^2 equals r^2, i.e. 20*log10(r) = t.
sg::IqChunk chunk_at_snr_db(double t) {
    const double r = std::pow(10.0, t / 20.0);
    sg::IqChunk c;
    c.samples.push_back({static_cast<float>(r / (r + 1.0)), 0.0f});
    return c;
}

}  // namespace

TEST(RocAuc, HandValues) {
    EXPECT_DOUBLE_EQ(sg::roc_auc({0.1, 0.2}, {0.3, 0.4}), 1.0);
    EXPECT_DOUBLE_EQ(sg::roc_auc({0.3, 0.4}, {0.1, 0.2}), 0.0);
    EXPECT_DOUBLE_EQ(sg::roc_auc({0.3}, {0.3}), 0.5);
    EXPECT_DOUBLE_EQ(sg::roc_auc({0.1, 0.4}, {0.2, 0.3}), 0.5);
}

TEST(RocAuc, ComplementSymmetry) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(40), b(25);
    for (double& x : a)
        x = u(rng);
    for (double& x : b)
        x = u(rng);
    EXPECT_NEAR(sg::roc_auc(a, b) + sg::roc_auc(b, a), 1.0, 1e-12);
}

TEST(RocAuc, InvariantUnderIncreasingTransforms) {
    const std::vector<double> legit = {0.11, 0.52, 0.23, 0.34};
    const std::vector<double> spoof = {0.29, 0.81, 0.47};
    const double base = sg::roc_auc(legit, spoof);
    auto mapped = [&](auto f) {
        std::vector<double> l, s;
        for (double x : legit)
            l.push_back(f(x));
        for (double x : spoof)
            s.push_back(f(x));
        return sg::roc_auc(l, s);
    };
    EXPECT_DOUBLE_EQ(mapped([](double x) { return std::exp(x); }), base);
    EXPECT_DOUBLE_EQ(mapped([](double x) { return 100.0 * x - 3.0; }), base);
}

TEST(RocAuc, MatchesPairwiseCountingOracle) {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 40; ++rep) {
        std::uniform_int_distribution<std::size_t> size_dist(1, 80);
        std::vector<double> legit(size_dist(rng)), spoof(size_dist(rng));
        if (rep % 2 == 0) {
            // coarse alphabet: forces plenty of ties, including cross-class
            std::uniform_int_distribution<int> v(0, 9);
            for (double& x : legit)
                x = 0.1 * v(rng);
            for (double& x : spoof)
                x = 0.1 * v(rng);
        } else {
            std::uniform_real_distribution<double> v(-1.0, 1.0);
            for (double& x : legit)
                x = v(rng);
            for (double& x : spoof)
                x = v(rng);
        }
        EXPECT_NEAR(sg::roc_auc(legit, spoof), oracle::pairwise_auc(legit, spoof), 1e-12);
    }
}

TEST(RocAuc, EmptySideRejected) {
    EXPECT_THROW(sg::roc_auc({}, {0.5}), std::invalid_argument);
    EXPECT_THROW(sg::roc_auc({0.5}, {}), std::invalid_argument);
    EXPECT_THROW(sg::roc_auc({std::nan("")}, {0.5}), std::invalid_argument);
}

TEST(Quantile, LinearInterpolationHandValues) {
    const std::vector<double> v = {5.0, 1.0, 4.0, 2.0, 3.0};  // sorts to 1..5
    EXPECT_NEAR(sg::quantile_linear(v, 0.05), 1.2, 1e-12);
    EXPECT_NEAR(sg::quantile_linear(v, 0.50), 3.0, 1e-12);
    EXPECT_NEAR(sg::quantile_linear(v, 0.95), 4.8, 1e-12);
    EXPECT_DOUBLE_EQ(sg::quantile_linear(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(sg::quantile_linear(v, 1.0), 5.0);
    EXPECT_NEAR(sg::quantile_linear({0.0, 1.0}, 0.05), 0.05, 1e-12);
}

TEST(Quantile, DegenerateInputs) {
    EXPECT_DOUBLE_EQ(sg::quantile_linear({0.7, 0.7, 0.7}, 0.95), 0.7);
    EXPECT_DOUBLE_EQ(sg::quantile_linear({2.5}, 0.5), 2.5);
    EXPECT_THROW(sg::quantile_linear({}, 0.5), std::invalid_argument);
    EXPECT_THROW(sg::quantile_linear({1.0}, 1.5), std::invalid_argument);
}

TEST(Quantile, SummaryOrdering) {
    const sg::Quantiles q = sg::quantiles_of({0.91, 0.97, 0.88, 0.99, 0.95});
    EXPECT_LE(q.q05, q.q50);
    EXPECT_LE(q.q50, q.q95);
}

TEST(Kfold, HeldOutFoldsPartitionTheLegitSet) {
    std::vector<double> values(100);
    for (std::size_t j = 0; j < values.size(); ++j)
        values[j] = static_cast<double>(j);
    const Eigen::MatrixXd legit = marker_batch(values);
    const Eigen::MatrixXd spoof = marker_batch({1000.0, 1001.0});

    sg::KfoldConfig cfg;
    cfg.k = 5;
    cfg.seed = 42;
    std::vector<std::multiset<double>> fold_train_sets;
    const sg::EvalReport report = sg::kfold_eval_with(
        legit, spoof, cfg, [&](const Eigen::MatrixXd& train_batch, std::uint64_t) {
            std::multiset<double> cols;
            for (Eigen::Index j = 0; j < train_batch.cols(); ++j)
                cols.insert(train_batch(0, j));
            fold_train_sets.push_back(std::move(cols));
            return zero_model(1);
        });

    ASSERT_EQ(fold_train_sets.size(), 5u);
    ASSERT_EQ(report.fold_aucs.size(), 5u);
    ASSERT_EQ(report.fold_taus.size(), 5u);
    EXPECT_EQ(report.n_legit, 100u);
    EXPECT_EQ(report.n_spoof, 2u);

    std::multiset<double> all_held_out;
    for (const auto& train_set : fold_train_sets) {
        EXPECT_EQ(train_set.size(), 80u);
        for (double v : values)
            if (!train_set.count(v))
                all_held_out.insert(v);
    }
    // complement of each fold's training set = its test fold; together they
    // must cover every image exactly once
    EXPECT_EQ(all_held_out.size(), 100u);
    for (double v : values)
        EXPECT_EQ(all_held_out.count(v), 1u) << "image " << v;
}

TEST(Kfold, UnevenFoldSizesSpreadTheRemainder) {
    std::vector<double> values(100);
    for (std::size_t j = 0; j < values.size(); ++j)
        values[j] = static_cast<double>(j);
    sg::KfoldConfig cfg;
    cfg.k = 7;
    cfg.seed = 9;
    std::vector<std::size_t> train_sizes;
    sg::kfold_eval_with(marker_batch(values), marker_batch({500.0}), cfg,
                        [&](const Eigen::MatrixXd& train_batch, std::uint64_t) {
                            train_sizes.push_back(static_cast<std::size_t>(train_batch.cols()));
                            return zero_model(1);
                        });
    // 100 = 15 + 15 + 14*5; train size is the complement
    const std::vector<std::size_t> expected = {85, 85, 86, 86, 86, 86, 86};
    EXPECT_EQ(train_sizes, expected);
}

TEST(Kfold, ShuffleAndFoldSeedsAreDerivedFromMaster) {
    std::vector<double> values(30);
    for (std::size_t j = 0; j < values.size(); ++j)
        values[j] = static_cast<double>(j) * 0.1;
    const Eigen::MatrixXd legit = marker_batch(values);
    const Eigen::MatrixXd spoof = marker_batch({9.0, 9.1});

    sg::KfoldConfig cfg;
    cfg.k = 3;
    cfg.seed = 77;
    std::vector<std::uint64_t> fold_seeds;
    auto recorder = [&](const Eigen::MatrixXd&, std::uint64_t fold_seed) {
        fold_seeds.push_back(fold_seed);
        return zero_model(1);
    };
    const sg::EvalReport a = sg::kfold_eval_with(legit, spoof, cfg, recorder);
    const std::vector<std::uint64_t> first_seeds = fold_seeds;
    fold_seeds.clear();
    const sg::EvalReport b = sg::kfold_eval_with(legit, spoof, cfg, recorder);

    EXPECT_EQ(a.fold_aucs, b.fold_aucs);
    EXPECT_EQ(first_seeds, fold_seeds);
    const std::vector<std::uint64_t> expected = {sg::derive_seed(77, 1), sg::derive_seed(77, 2),
                                                 sg::derive_seed(77, 3)};
    EXPECT_EQ(fold_seeds, expected);

    cfg.seed = 78;
    std::multiset<double> first_train_78, first_train_77;
    sg::kfold_eval_with(legit, spoof, cfg,
                        [&](const Eigen::MatrixXd& tb, std::uint64_t) {
                            if (first_train_78.empty())
                                for (Eigen::Index j = 0; j < tb.cols(); ++j)
                                    first_train_78.insert(tb(0, j));
                            return zero_model(1);
                        });
    cfg.seed = 77;
    sg::kfold_eval_with(legit, spoof, cfg,
                        [&](const Eigen::MatrixXd& tb, std::uint64_t) {
                            if (first_train_77.empty())
                                for (Eigen::Index j = 0; j < tb.cols(); ++j)
                                    first_train_77.insert(tb(0, j));
                            return zero_model(1);
                        });
    EXPECT_NE(first_train_77, first_train_78);  // different master, different shuffle
}

TEST(Kfold, IndistinguishableScoresGiveHalfEverywhere) {
    const Eigen::MatrixXd legit = marker_batch(std::vector<double>(10, 0.3));
    const Eigen::MatrixXd spoof = marker_batch(std::vector<double>(4, 0.3));
    sg::KfoldConfig cfg;
    cfg.k = 5;
    cfg.seed = 1;
    const sg::EvalReport report = sg::kfold_eval_with(
        legit, spoof, cfg, [](const Eigen::MatrixXd&, std::uint64_t) { return zero_model(1); });
    for (double auc : report.fold_aucs)
        EXPECT_DOUBLE_EQ(auc, 0.5);
    EXPECT_DOUBLE_EQ(report.quantiles.q05, 0.5);
    EXPECT_DOUBLE_EQ(report.quantiles.q50, 0.5);
    EXPECT_DOUBLE_EQ(report.quantiles.q95, 0.5);
}

TEST(Kfold, PerfectlySeparatedScoresGiveOneEverywhere) {
    const Eigen::MatrixXd legit = marker_batch(std::vector<double>(10, 0.1));
    const Eigen::MatrixXd spoof = marker_batch(std::vector<double>(4, 0.9));
    sg::KfoldConfig cfg;
    cfg.k = 5;
    cfg.seed = 1;
    const sg::EvalReport report = sg::kfold_eval_with(
        legit, spoof, cfg, [](const Eigen::MatrixXd&, std::uint64_t) { return zero_model(1); });
    for (double auc : report.fold_aucs)
        EXPECT_DOUBLE_EQ(auc, 1.0);
    EXPECT_DOUBLE_EQ(report.quantiles.q50, 1.0);
}

TEST(Kfold, StructuralErrorsRejected) {
    const Eigen::MatrixXd legit = marker_batch({0.1, 0.2, 0.3, 0.4});
    const Eigen::MatrixXd spoof = marker_batch({0.9});
    auto cheap = [](const Eigen::MatrixXd&, std::uint64_t) { return zero_model(1); };

    sg::KfoldConfig cfg;
    cfg.k = 1;
    EXPECT_THROW(sg::kfold_eval_with(legit, spoof, cfg, cheap), std::invalid_argument);
    cfg.k = 5;  // more folds than legit images
    EXPECT_THROW(sg::kfold_eval_with(legit, spoof, cfg, cheap), std::invalid_argument);
    cfg.k = 2;
    EXPECT_THROW(sg::kfold_eval_with(legit, Eigen::MatrixXd(1, 0), cfg, cheap),
                 std::invalid_argument);
    EXPECT_THROW(sg::kfold_eval_with(legit, Eigen::MatrixXd::Zero(2, 1), cfg, cheap),
                 std::invalid_argument);
    // k = m = 2: either fold would train on a single image
    EXPECT_THROW(sg::kfold_eval_with(marker_batch({0.1, 0.2}), spoof, cfg, cheap),
                 std::invalid_argument);
}

TEST(Kfold, DefaultTrainerRunsEndToEnd) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    Eigen::MatrixXd legit(16, 8);
    for (Eigen::Index j = 0; j < legit.size(); ++j)
        legit.data()[j] = u(rng);
    Eigen::MatrixXd spoof = legit.leftCols(3);
    spoof.array() += 0.5;

    sg::KfoldConfig cfg;
    cfg.k = 2;
    cfg.seed = 3;
    cfg.train.epochs = 3;
    cfg.train.latent = 2;
    cfg.train.hidden2 = 2;
    cfg.train.hidden3 = 2;
    const sg::EvalReport report = sg::kfold_eval(legit, spoof, cfg);
    ASSERT_EQ(report.fold_aucs.size(), 2u);
    for (double auc : report.fold_aucs) {
        EXPECT_GE(auc, 0.0);
        EXPECT_LE(auc, 1.0);
    }
}

TEST(SnrOverlap, CountsSpoofChunksInsideTheLegitInterval) {
    std::vector<sg::IqChunk> legit = {chunk_at_snr_db(0.0), chunk_at_snr_db(2.5)};
    std::vector<sg::IqChunk> spoof;
    for (double t : {0.0, 1.0, 2.0, 3.0, 4.0}) {
        spoof.push_back(chunk_at_snr_db(t));
        ASSERT_NEAR(sg::chunk_snr_db(spoof.back()), t, 1e-4);  // float32 storage wiggle
    }
    // legit interval is [0, 2.5]; spoof SNRs 0, 1, 2 land inside
    EXPECT_NEAR(sg::snr_overlap(legit, spoof), 0.6, 1e-12);
}

TEST(SnrOverlap, IdenticalSetsFullyOverlap) {
    std::vector<sg::IqChunk> chunks = {chunk_at_snr_db(1.0), chunk_at_snr_db(3.0)};
    EXPECT_DOUBLE_EQ(sg::snr_overlap(chunks, chunks), 1.0);
}

TEST(SnrOverlap, DisjointSetsDoNotOverlap) {
    std::vector<sg::IqChunk> legit = {chunk_at_snr_db(0.0), chunk_at_snr_db(1.0)};
    std::vector<sg::IqChunk> spoof = {chunk_at_snr_db(10.0), chunk_at_snr_db(12.0)};
    EXPECT_DOUBLE_EQ(sg::snr_overlap(legit, spoof), 0.0);
}

TEST(SnrOverlap, EmptySideRejected) {
    std::vector<sg::IqChunk> chunks = {chunk_at_snr_db(1.0)};
    EXPECT_THROW(sg::snr_overlap({}, chunks), std::invalid_argument);
    EXPECT_THROW(sg::snr_overlap(chunks, {}), std::invalid_argument);
}

TEST(Overhead, MeasuresPositiveTimesAndArtifactSizes) {
    const sg::GridSpec grid{8, 8, -1.5, 1.5, -1.5, 1.5};
    sg::DetectorState st;
    st.model = zero_model(64);
    st.grid = grid;
    st.tau = 1.0;

    sg::ChannelParams p;
    p.noise_sigma = 0.1;
    p.seed = 4;
    const sg::IqChunk chunk = sg::gen_dqpsk_chunk(p, 200);

    const sg::OverheadStats stats = sg::measure_overhead(st, chunk, 51);
    EXPECT_GT(stats.tau_img_ms, 0.0);
    EXPECT_GT(stats.tau_ae_ms, 0.0);
    EXPECT_LT(stats.tau_img_ms, 1000.0);
    EXPECT_LT(stats.tau_ae_ms, 1000.0);
    EXPECT_EQ(stats.model_bytes, sg::save_model(st.model).size());
    EXPECT_EQ(stats.image_bytes, sg::pgm_byte_size(grid));
    EXPECT_THROW(sg::measure_overhead(st, chunk, 0), std::invalid_argument);
}

TEST(Report, SerializationCarriesEveryField) {
    sg::EvalReport r;
    r.k = 2;
    r.fold_aucs = {0.75, 1.0};
    r.fold_taus = {0.01, 0.02};
    r.quantiles = sg::quantiles_of(r.fold_aucs);
    r.n_legit = 10;
    r.n_spoof = 4;
    r.overhead.tau_img_ms = 0.5;
    r.overhead.tau_ae_ms = 2.0;
    r.overhead.model_bytes = 1234;
    r.overhead.image_bytes = 75;
    r.snr_overlap = 0.93;
    r.config["k"] = "2";
    r.config["n"] = "1000";

    const nlohmann::json j = sg::report_to_json(r);
    EXPECT_EQ(j.at("k").get<int>(), 2);
    EXPECT_EQ(j.at("fold_aucs").size(), 2u);
    EXPECT_DOUBLE_EQ(j.at("quantiles").at("q50").get<double>(), 0.875);
    EXPECT_DOUBLE_EQ(j.at("snr_overlap").get<double>(), 0.93);
    EXPECT_EQ(j.at("config").at("n").get<std::string>(), "1000");
    EXPECT_EQ(j.at("overhead").at("model_bytes").get<std::size_t>(), 1234u);

    const std::string csv = sg::report_to_csv(r);
    EXPECT_EQ(csv.rfind("fold,auc,tau\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);

    const std::string text = sg::report_to_text(r);
    EXPECT_NE(text.find("fold AUC"), std::string::npos);
    EXPECT_NE(text.find("SNR overlap"), std::string::npos);
    EXPECT_NE(text.find("n = 1000"), std::string::npos);

    sg::EvalReport no_snr = r;
    no_snr.snr_overlap.reset();
    EXPECT_EQ(sg::report_to_json(no_snr).count("snr_overlap"), 0u);
}
