#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace disagg {

enum class Activation { ReLU, Tanh, ELU, SELU, Swish };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

struct NetworkParams {
    /// Hidden layer widths; one or two layers.
    std::vector<int> units{32};
    Activation activation = Activation::ReLU;
    double dropout = 0.0;
};

struct FeedForwardOptions {
    int trials = 100;
    int max_epochs = 1000;
    int patience = 50;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Trailing share of the training rows used for early stopping and trial selection.
    double validation_fraction = 0.2;
    int max_layers = 2;
    std::vector<int> unit_choices{8, 16, 32, 64, 128};
    std::vector<Activation> activations{Activation::ReLU, Activation::Tanh, Activation::ELU, Activation::SELU,
                                        Activation::Swish};
    std::vector<double> dropout_choices{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
};

/// Dense layers; weights[l] is (inputs x outputs). The last layer is the linear output unit.
struct NetworkState {
    NetworkParams params;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    double val_mse = 0.0;
    int best_epoch = 0;
    int trials_run = 0;
    int trials_diverged = 0;
};

namespace ffn {

Eigen::VectorXd predict(const NetworkState& net, const Eigen::MatrixXd& x);

/// Number of trailing validation rows for `n` training rows: max(1, floor(fraction*n)).
long validation_rows(long n, double fraction);

/// Adam on full-batch MSE with early stopping; restores the best-validation weights.
/// Throws NumericalError when the loss becomes non-finite.
NetworkState train(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train, const Eigen::MatrixXd& x_val,
                   const Eigen::VectorXd& y_val, const NetworkParams& params, const FeedForwardOptions& opts,
                   std::uint64_t seed);

/// Fixed architecture on a training window split into fit / trailing validation rows.
NetworkState fit_fixed(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetworkParams& params,
                       const FeedForwardOptions& opts, std::uint64_t seed);

/// The seeded quasi-random candidate architectures (Halton points with a random shift).
std::vector<NetworkParams> candidate_architectures(const FeedForwardOptions& opts, std::uint64_t seed);

/// Trains every candidate and keeps the lowest validation MSE.
NetworkState fit_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const FeedForwardOptions& opts,
                        std::uint64_t seed);

}  // namespace ffn

}  // namespace disagg
