// Sparse autoencoder for constellation images.
//
// Architecture: a sigmoid encoder projects the flattened image onto a small
// latent vector; two sigmoid hidden layers and a linear output layer
// reconstruct the image. Training minimizes
//     mean-squared reconstruction error
//   + sparsity_weight  * sum_j KL(sparsity_target || mean latent activation j)
//   + l2_weight        * 1/2 * sum of squared weights   (biases excluded)
// with full-batch L-BFGS.
#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "spoofguard/lbfgs.hpp"

namespace spoofguard {

enum class Activation : std::uint8_t { sigmoid, linear };

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::sigmoid;
};

/// Layer widths: input D (= image pixels), latent L, and the two decoder
/// hidden widths.
struct AeDims {
    Eigen::Index input = 0;
    Eigen::Index latent = 16;
    Eigen::Index hidden2 = 16;
    Eigen::Index hidden3 = 16;

    friend bool operator==(const AeDims&, const AeDims&) = default;

    void validate() const {
        if (input < 1 || latent < 1 || hidden2 < 1 || hidden3 < 1)
            throw std::invalid_argument("AeDims: every layer must have at least one unit");
    }
};

struct TrainConfig {
    int epochs = 250;              // L-BFGS iterations on the full batch
    double sparsity_weight = 0.5;  // weight of the KL sparsity penalty
    double sparsity_target = 0.05; // desired mean latent activation, in (0,1)
    double l2_weight = 0.01;       // weight of the 1/2*sum(W^2) penalty
    Eigen::Index latent = 16;
    Eigen::Index hidden2 = 16;
    Eigen::Index hidden3 = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 0)
            throw std::invalid_argument("TrainConfig: epochs must be >= 0");
        if (sparsity_weight < 0.0 || l2_weight < 0.0)
            throw std::invalid_argument("TrainConfig: penalty weights must be >= 0");
        if (!(sparsity_target > 0.0 && sparsity_target < 1.0))
            throw std::invalid_argument("TrainConfig: sparsity target must lie in (0,1)");
        if (latent < 1 || hidden2 < 1 || hidden3 < 1)
            throw std::invalid_argument("TrainConfig: layer sizes must be >= 1");
    }
};

/// Encoder + decoder parameters. `train_config` records the hyperparameters
/// the model was trained with (persisted alongside the weights).
struct AeModel {
    AeDims dims;
    DenseLayer encoder;                        // latent x input, sigmoid
    std::array<DenseLayer, 2> decoder_hidden;  // hidden2 x latent, hidden3 x hidden2, sigmoid
    DenseLayer output;                         // input x hidden3, linear
    TrainConfig train_config;

    Eigen::Index parameter_count() const {
        auto layer = [](const DenseLayer& l) { return l.weights.size() + l.bias.size(); };
        return layer(encoder) + layer(decoder_hidden[0]) + layer(decoder_hidden[1]) + layer(output);
    }
};

struct LossBreakdown {
    double total = 0.0;
    double mse = 0.0;
    double sparsity_penalty = 0.0;
    double l2_penalty = 0.0;
};

namespace detail {

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) {
    return 1.0 / (1.0 + (-z).exp());
}

// Mean activations can saturate to exactly 0 or 1 in double precision; the
// KL term needs them strictly inside (0,1).
inline constexpr double kActivationFloor = 1e-12;

inline double clamp_activation(double a) {
    return std::min(std::max(a, kActivationFloor), 1.0 - kActivationFloor);
}

}  // namespace detail

/// Fresh model with weights drawn uniformly from [-r, r],
/// r = sqrt(6 / (fan_in + fan_out)) per layer, and zero biases.
/// Deterministic: same seed, same model. Draw order is fixed as encoder,
/// first hidden, second hidden, output, column-major within each matrix.
inline AeModel init_model(const AeDims& dims, std::uint64_t seed) {
    dims.validate();
    AeModel m;
    m.dims = dims;
    std::mt19937_64 rng(seed);
    auto make_layer = [&rng](Eigen::Index rows, Eigen::Index cols, Activation act) {
        DenseLayer l;
        l.activation = act;
        const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-r, r);
        l.weights.resize(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index rr = 0; rr < rows; ++rr)
                l.weights(rr, c) = dist(rng);
        l.bias = Eigen::VectorXd::Zero(rows);
        return l;
    };
    m.encoder = make_layer(dims.latent, dims.input, Activation::sigmoid);
    m.decoder_hidden[0] = make_layer(dims.hidden2, dims.latent, Activation::sigmoid);
    m.decoder_hidden[1] = make_layer(dims.hidden3, dims.hidden2, Activation::sigmoid);
    m.output = make_layer(dims.input, dims.hidden3, Activation::linear);
    return m;
}

namespace detail {

inline void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                    std::to_string(got) + ", expected " + std::to_string(want) + ")");
}

// Batch forward pass; columns are images.
struct ForwardCache {
    Eigen::MatrixXd z1;    // latent   x M
    Eigen::MatrixXd z2;    // hidden2  x M
    Eigen::MatrixXd z3;    // hidden3  x M
    Eigen::MatrixXd xhat;  // input    x M
};

inline ForwardCache forward_batch(const AeModel& m, const Eigen::MatrixXd& x) {
    check_dim(x.rows(), m.dims.input, "forward");
    ForwardCache c;
    c.z1 = sigmoid(((m.encoder.weights * x).colwise() + m.encoder.bias).array());
    c.z2 = sigmoid(((m.decoder_hidden[0].weights * c.z1).colwise() + m.decoder_hidden[0].bias).array());
    c.z3 = sigmoid(((m.decoder_hidden[1].weights * c.z2).colwise() + m.decoder_hidden[1].bias).array());
    c.xhat = (m.output.weights * c.z3).colwise() + m.output.bias;
    return c;
}

}  // namespace detail

/// Latent representation of one image: sigmoid(W_enc * x + b_enc).
inline Eigen::VectorXd encode(const AeModel& m, const Eigen::VectorXd& x) {
    detail::check_dim(x.rows(), m.dims.input, "encode");
    return detail::sigmoid((m.encoder.weights * x + m.encoder.bias).array());
}

/// Reconstruction from a latent vector: two sigmoid hidden layers, then the
/// linear output layer.
inline Eigen::VectorXd decode(const AeModel& m, const Eigen::VectorXd& z) {
    detail::check_dim(z.rows(), m.dims.latent, "decode");
    const Eigen::VectorXd z2 =
        detail::sigmoid((m.decoder_hidden[0].weights * z + m.decoder_hidden[0].bias).array());
    const Eigen::VectorXd z3 =
        detail::sigmoid((m.decoder_hidden[1].weights * z2 + m.decoder_hidden[1].bias).array());
    return m.output.weights * z3 + m.output.bias;
}

inline Eigen::VectorXd reconstruct(const AeModel& m, const Eigen::VectorXd& x) {
    return decode(m, encode(m, x));
}

/// Mean squared reconstruction error of one image on the [0,1] pixel scale:
/// (1/D) * sum((x - xhat)^2). This is the anomaly score.
inline double reconstruction_mse(const AeModel& m, const Eigen::VectorXd& x) {
    const Eigen::VectorXd xhat = reconstruct(m, x);
    return (x - xhat).squaredNorm() / static_cast<double>(m.dims.input);
}

// --- parameter packing ------------------------------------------------------
//
// Canonical flat layout (used by the optimizer, the gradient, and the model
// file): encoder W, encoder b, hidden1 W, hidden1 b, hidden2 W, hidden2 b,
// output W, output b, each matrix column-major.

inline Eigen::VectorXd pack_parameters(const AeModel& m) {
    Eigen::VectorXd theta(m.parameter_count());
    Eigen::Index at = 0;
    auto put = [&](const DenseLayer& l) {
        theta.segment(at, l.weights.size()) =
            Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
        at += l.weights.size();
        theta.segment(at, l.bias.size()) = l.bias;
        at += l.bias.size();
    };
    put(m.encoder);
    put(m.decoder_hidden[0]);
    put(m.decoder_hidden[1]);
    put(m.output);
    return theta;
}

inline void unpack_parameters(AeModel& m, const Eigen::VectorXd& theta) {
    if (theta.size() != m.parameter_count())
        throw std::invalid_argument("unpack_parameters: parameter vector size mismatch");
    Eigen::Index at = 0;
    auto take = [&](DenseLayer& l) {
        Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) =
            theta.segment(at, l.weights.size());
        at += l.weights.size();
        l.bias = theta.segment(at, l.bias.size());
        at += l.bias.size();
    };
    take(m.encoder);
    take(m.decoder_hidden[0]);
    take(m.decoder_hidden[1]);
    take(m.output);
}

/// Regularized training loss over a batch (columns of `batch` are images).
inline LossBreakdown loss(const AeModel& m, const Eigen::MatrixXd& batch, const TrainConfig& cfg) {
    if (batch.cols() == 0)
        throw std::invalid_argument("loss: empty batch");
    const auto cache = detail::forward_batch(m, batch);
    const auto M = static_cast<double>(batch.cols());
    const auto D = static_cast<double>(m.dims.input);

    LossBreakdown lb;
    lb.mse = (cache.xhat - batch).squaredNorm() / (M * D);

    const double rho = cfg.sparsity_target;
    for (Eigen::Index j = 0; j < m.dims.latent; ++j) {
        const double rho_hat = detail::clamp_activation(cache.z1.row(j).mean());
        lb.sparsity_penalty +=
            rho * std::log(rho / rho_hat) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
    }

    auto sq = [](const DenseLayer& l) { return l.weights.squaredNorm(); };
    lb.l2_penalty = 0.5 * (sq(m.encoder) + sq(m.decoder_hidden[0]) + sq(m.decoder_hidden[1]) +
                           sq(m.output));

    lb.total = lb.mse + cfg.sparsity_weight * lb.sparsity_penalty + cfg.l2_weight * lb.l2_penalty;
    return lb;
}

/// Loss plus its exact analytic gradient in canonical parameter order.
/// Backpropagation through the linear output and the three sigmoid layers;
/// the sparsity term contributes through the batch-mean latent activations.
inline double loss_and_gradient(const AeModel& m, const Eigen::MatrixXd& batch,
                                const TrainConfig& cfg, Eigen::VectorXd& grad_out,
                                LossBreakdown* breakdown = nullptr) {
    if (batch.cols() == 0)
        throw std::invalid_argument("loss_and_gradient: empty batch");
    const auto cache = detail::forward_batch(m, batch);
    const auto M = static_cast<double>(batch.cols());
    const auto D = static_cast<double>(m.dims.input);
    const double beta = cfg.sparsity_weight;
    const double lambda = cfg.l2_weight;
    const double rho = cfg.sparsity_target;

    LossBreakdown lb;
    lb.mse = (cache.xhat - batch).squaredNorm() / (M * D);

    Eigen::VectorXd rho_hat(m.dims.latent);
    for (Eigen::Index j = 0; j < m.dims.latent; ++j)
        rho_hat[j] = detail::clamp_activation(cache.z1.row(j).mean());
    for (Eigen::Index j = 0; j < m.dims.latent; ++j)
        lb.sparsity_penalty += rho * std::log(rho / rho_hat[j]) +
                               (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat[j]));

    auto sq = [](const DenseLayer& l) { return l.weights.squaredNorm(); };
    lb.l2_penalty = 0.5 * (sq(m.encoder) + sq(m.decoder_hidden[0]) + sq(m.decoder_hidden[1]) +
                           sq(m.output));
    lb.total = lb.mse + beta * lb.sparsity_penalty + lambda * lb.l2_penalty;
    if (breakdown)
        *breakdown = lb;

    // Output layer (linear): dL/dxhat of the MSE term.
    Eigen::MatrixXd delta_out = (2.0 / (M * D)) * (cache.xhat - batch);
    Eigen::MatrixXd g_w4 = delta_out * cache.z3.transpose() + lambda * m.output.weights;
    Eigen::VectorXd g_b4 = delta_out.rowwise().sum();

    auto sigmoid_back = [](const Eigen::MatrixXd& upstream, const Eigen::MatrixXd& act) {
        return (upstream.array() * act.array() * (1.0 - act.array())).matrix();
    };

    Eigen::MatrixXd delta3 = sigmoid_back(m.output.weights.transpose() * delta_out, cache.z3);
    Eigen::MatrixXd g_w3 = delta3 * cache.z2.transpose() + lambda * m.decoder_hidden[1].weights;
    Eigen::VectorXd g_b3 = delta3.rowwise().sum();

    Eigen::MatrixXd delta2 = sigmoid_back(m.decoder_hidden[1].weights.transpose() * delta3, cache.z2);
    Eigen::MatrixXd g_w2 = delta2 * cache.z1.transpose() + lambda * m.decoder_hidden[0].weights;
    Eigen::VectorXd g_b2 = delta2.rowwise().sum();

    // Sparsity enters at the latent layer through rho_hat = rowwise mean.
    Eigen::VectorXd sparsity_grad =
        beta / M * (-(rho * rho_hat.array().inverse()) +
                    (1.0 - rho) * (1.0 - rho_hat.array()).inverse()).matrix();
    Eigen::MatrixXd upstream1 =
        (m.decoder_hidden[0].weights.transpose() * delta2).colwise() + sparsity_grad;
    Eigen::MatrixXd delta1 = sigmoid_back(upstream1, cache.z1);
    Eigen::MatrixXd g_w1 = delta1 * batch.transpose() + lambda * m.encoder.weights;
    Eigen::VectorXd g_b1 = delta1.rowwise().sum();

    grad_out.resize(m.parameter_count());
    Eigen::Index at = 0;
    auto put = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
        grad_out.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        at += w.size();
        grad_out.segment(at, b.size()) = b;
        at += b.size();
    };
    put(g_w1, g_b1);
    put(g_w2, g_b2);
    put(g_w3, g_b3);
    put(g_w4, g_b4);
    return lb.total;
}

/// Gradient of loss().total with respect to every parameter, flattened in
/// canonical order.
inline Eigen::VectorXd gradient(const AeModel& m, const Eigen::MatrixXd& batch,
                                const TrainConfig& cfg) {
    Eigen::VectorXd g;
    loss_and_gradient(m, batch, cfg, g);
    return g;
}

/// Trains a fresh model on the full image batch (columns are normalized
/// images) with L-BFGS: history 10, strong Wolfe line search, at most
/// cfg.epochs iterations, stopping early when the gradient inf-norm drops
/// below 1e-7. Returns the model with the lowest total loss observed at any
/// evaluation. Deterministic given cfg.seed.
inline AeModel train(const Eigen::MatrixXd& images, const TrainConfig& cfg,
                     const std::function<void(const LbfgsIterate&)>& on_iteration = {}) {
    cfg.validate();
    if (images.cols() < 2)
        throw std::invalid_argument("train: need at least 2 images");
    AeDims dims{images.rows(), cfg.latent, cfg.hidden2, cfg.hidden3};
    AeModel model = init_model(dims, cfg.seed);
    model.train_config = cfg;

    AeModel scratch = model;  // reused by the objective to avoid reallocation
    auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        unpack_parameters(scratch, theta);
        return loss_and_gradient(scratch, images, cfg, grad);
    };

    LbfgsOptions opt;
    opt.max_iterations = cfg.epochs;
    opt.history = 10;
    opt.grad_tolerance = 1e-7;
    const LbfgsResult res = lbfgs_minimize(objective, pack_parameters(model), opt, on_iteration);

    unpack_parameters(model, res.best_x);
    return model;
}

}  // namespace spoofguard
