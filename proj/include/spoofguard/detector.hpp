// Threshold detector: an autoencoder plus a decision rule calibrated on
// reconstruction errors of legitimate training images.
//
//   tau = mean(train errors) + 3 * sample stddev(train errors)
//   decision: legitimate iff mse <= tau (boundary counts as legitimate)
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofguard/autoencoder.hpp"
#include "spoofguard/imaging.hpp"
#include "spoofguard/iq.hpp"
#include "spoofguard/model_io.hpp"

namespace spoofguard {

class DetectorIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model input width and image grid disagree; artifacts are incompatible.
class DimensionMismatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ThresholdStats {
    double mean = 0.0;
    double stddev = 0.0;
    double tau = 0.0;
};

/// Mean + 3 sigma over training reconstruction errors. Sample stddev (n-1);
/// requires at least two values.
inline ThresholdStats fit_threshold(const std::vector<double>& errors) {
    if (errors.size() < 2)
        throw std::invalid_argument("fit_threshold: need at least 2 training errors");
    double sum = 0.0;
    for (double e : errors)
        sum += e;
    const double mean = sum / static_cast<double>(errors.size());
    double ss = 0.0;
    for (double e : errors)
        ss += (e - mean) * (e - mean);
    const double var = ss / static_cast<double>(errors.size() - 1);
    ThresholdStats st;
    st.mean = mean;
    st.stddev = std::sqrt(var);
    st.tau = mean + 3.0 * st.stddev;
    return st;
}

inline void check_compatible(const AeModel& model, const GridSpec& grid) {
    grid.validate();
    if (static_cast<Eigen::Index>(grid.bins()) != model.dims.input)
        throw DimensionMismatchError(
            "grid " + std::to_string(grid.p) + "x" + std::to_string(grid.q) + " (" +
            std::to_string(grid.bins()) + " pixels) does not match model input width " +
            std::to_string(model.dims.input));
}

struct DetectorState {
    AeModel model;
    GridSpec grid;
    double tau = 0.0;
    double mean_train = 0.0;
    double std_train = 0.0;
    std::vector<double> mse_train;
};

struct Verdict {
    double mse = 0.0;
    double tau = 0.0;
    Label decision = Label::unknown;
};

/// Per-column reconstruction errors for a batch of normalized images.
inline std::vector<double> batch_mse(const AeModel& model, const Eigen::MatrixXd& batch) {
    if (batch.rows() != model.dims.input)
        throw DimensionMismatchError("batch row count " + std::to_string(batch.rows()) +
                                     " does not match model input width " +
                                     std::to_string(model.dims.input));
    const detail::ForwardCache cache = detail::forward_batch(model, batch);
    std::vector<double> out(static_cast<std::size_t>(batch.cols()));
    const double d = static_cast<double>(batch.rows());
    for (Eigen::Index m = 0; m < batch.cols(); ++m)
        out[static_cast<std::size_t>(m)] = (cache.xhat.col(m) - batch.col(m)).squaredNorm() / d;
    return out;
}

inline Eigen::MatrixXd images_to_batch(const std::vector<HistogramImage>& images) {
    if (images.empty())
        throw std::invalid_argument("images_to_batch: empty image set");
    const std::size_t d = images.front().pixels.size();
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(images.size()));
    for (std::size_t m = 0; m < images.size(); ++m) {
        const std::vector<double> x = normalize_image(images[m]);
        if (x.size() != d)
            throw std::invalid_argument("images_to_batch: inconsistent image sizes");
        for (std::size_t i = 0; i < d; ++i)
            batch(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = x[i];
    }
    return batch;
}

inline double image_mse(const AeModel& model, const HistogramImage& image) {
    check_compatible(model, image.grid);
    const std::vector<double> x = normalize_image(image);
    return reconstruction_mse(model,
                              Eigen::Map<const Eigen::VectorXd>(
                                  x.data(), static_cast<Eigen::Index>(x.size())));
}

inline double chunk_mse(const AeModel& model, const GridSpec& grid, const IqChunk& chunk) {
    return image_mse(model, make_histogram(chunk, grid));
}

inline Verdict classify(const DetectorState& state, const HistogramImage& image) {
    Verdict v;
    v.mse = image_mse(state.model, image);
    v.tau = state.tau;
    v.decision = v.mse <= state.tau ? Label::legitimate : Label::spoofed;
    return v;
}

inline Verdict classify_chunk(const DetectorState& state, const IqChunk& chunk) {
    return classify(state, make_histogram(chunk, state.grid));
}

/// Calibrates the threshold from training images already normalized into a
/// D x M column batch.
inline DetectorState fit_detector(AeModel model, const GridSpec& grid,
                                  const Eigen::MatrixXd& train_batch) {
    check_compatible(model, grid);
    DetectorState st;
    st.model = std::move(model);
    st.grid = grid;
    st.mse_train = batch_mse(st.model, train_batch);
    const ThresholdStats ts = fit_threshold(st.mse_train);
    st.tau = ts.tau;
    st.mean_train = ts.mean;
    st.std_train = ts.stddev;
    return st;
}

inline DetectorState fit_detector(AeModel model, const GridSpec& grid,
                                  const std::vector<HistogramImage>& train_images) {
    return fit_detector(std::move(model), grid, images_to_batch(train_images));
}

inline std::filesystem::path sidecar_path_for(const std::filesystem::path& model_path) {
    std::filesystem::path p = model_path;
    p += ".json";
    return p;
}

inline nlohmann::json grid_to_json(const GridSpec& g) {
    return nlohmann::json{{"p", g.p},         {"q", g.q},         {"i_min", g.i_min},
                          {"i_max", g.i_max}, {"q_min", g.q_min}, {"q_max", g.q_max}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
    GridSpec g;
    g.p = j.at("p").get<int>();
    g.q = j.at("q").get<int>();
    g.i_min = j.at("i_min").get<double>();
    g.i_max = j.at("i_max").get<double>();
    g.q_min = j.at("q_min").get<double>();
    g.q_max = j.at("q_max").get<double>();
    g.validate();
    return g;
}

/// Writes the model file plus a JSON sidecar (threshold calibration, grid,
/// training hyperparameters, and the caller's resolved run configuration).
inline void save_detector(const DetectorState& state, const std::filesystem::path& model_path,
                          const std::map<std::string, std::string>& resolved_config = {}) {
    save_model_file(state.model, model_path);
    nlohmann::json j;
    j["tau"] = state.tau;
    j["mean_train"] = state.mean_train;
    j["std_train"] = state.std_train;
    j["mse_train"] = state.mse_train;
    j["grid"] = grid_to_json(state.grid);
    j["train_config"] = {{"epochs", state.model.train_config.epochs},
                         {"sparsity_weight", state.model.train_config.sparsity_weight},
                         {"sparsity_target", state.model.train_config.sparsity_target},
                         {"l2_weight", state.model.train_config.l2_weight},
                         {"latent", state.model.dims.latent},
                         {"hidden2", state.model.dims.hidden2},
                         {"hidden3", state.model.dims.hidden3},
                         {"seed", state.model.train_config.seed}};
    if (!resolved_config.empty())
        j["resolved_config"] = resolved_config;
    std::ofstream out(sidecar_path_for(model_path), std::ios::trunc);
    if (!out)
        throw DetectorIoError(sidecar_path_for(model_path).string() + ": cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw DetectorIoError(sidecar_path_for(model_path).string() + ": write failed");
}

inline DetectorState load_detector(const std::filesystem::path& model_path) {
    DetectorState st;
    st.model = load_model_file(model_path);
    const std::filesystem::path side = sidecar_path_for(model_path);
    std::ifstream in(side);
    if (!in)
        throw DetectorIoError(side.string() + ": cannot open");
    nlohmann::json j;
    try {
        in >> j;
        st.tau = j.at("tau").get<double>();
        st.mean_train = j.at("mean_train").get<double>();
        st.std_train = j.at("std_train").get<double>();
        st.mse_train = j.at("mse_train").get<std::vector<double>>();
        st.grid = grid_from_json(j.at("grid"));
    } catch (const nlohmann::json::exception& e) {
        throw DetectorIoError(side.string() + ": " + e.what());
    }
    check_compatible(st.model, st.grid);
    return st;
}

}  // namespace spoofguard
