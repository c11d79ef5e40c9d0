#pragma once

#include "disagg/chow_lin.hpp"
#include "disagg/elastic_net.hpp"
#include "disagg/feedforward.hpp"
#include "disagg/gradient_boost.hpp"
#include "disagg/series.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace disagg {

enum class RegressorKind { ChowLin, ElasticNet, GradientBoost, FeedForward };

std::string to_string(RegressorKind kind);
RegressorKind parse_regressor_kind(const std::string& text);

struct RegressorSpec {
    RegressorKind kind = RegressorKind::ChowLin;
    ChowLinOptions chow_lin;
    ElasticNetOptions elastic_net;
    BoostGrid boost;
    FeedForwardOptions feedforward;
    std::uint64_t seed = 0;
};

using ModelState = std::variant<ChowLinState, ElasticNetState, BoostState, NetworkState>;

struct FitResult {
    RegressorKind kind = RegressorKind::ChowLin;
    std::vector<std::string> columns;
    ModelState state;
    std::uint64_t seed = 0;
    /// Hash of the training window (index, column names, values).
    std::uint64_t fingerprint = 0;
    std::vector<std::string> warnings;
};

std::uint64_t training_fingerprint(const Panel& x, const Series& y);

/// Fits with the full hyperparameter search of the given kind.
FitResult fit(const RegressorSpec& spec, const Panel& x, const Series& y);

/// Re-estimates weights only, reusing the hyperparameters chosen in `tuned`
/// (Chow-Lin re-estimates rho, which is a model parameter rather than a hyperparameter).
FitResult refit(const RegressorSpec& spec, const FitResult& tuned, const Panel& x, const Series& y,
                std::uint64_t seed);

/// Row-wise predictions; the panel must carry exactly the training columns in order.
Series predict(const FitResult& fit, const Panel& x);

/// Predictions for a raw matrix whose columns follow `fit.columns`.
Eigen::VectorXd predict_rows(const FitResult& fit, const Eigen::MatrixXd& x);

/// Chow-Lin on monthly regressors aggregated by 3-month sums (intercept is per month).
FitResult fit_chow_lin(const Panel& x_monthly, const Series& y_quarterly, const ChowLinOptions& opts = {});

/// Monthly series X_m beta + R J' Omega^{-1}(Y - J X_m beta); its 3-month sums equal Y.
Series chow_lin_distribute(const FitResult& fit, const Panel& x_monthly, const Series& y_quarterly);

FitResult fit_elastic_net(const Panel& x, const Series& y, int folds, const ElasticNetOptions& opts = {});

struct BootstrapResult {
    /// Fit whose coefficients are the bootstrap means.
    FitResult fit;
    enet::BootstrapSummary summary;
};

/// Bootstrap at the hyperparameters already chosen in `tuned`.
BootstrapResult bootstrap_elastic_net(const FitResult& tuned, const Panel& x, const Series& y,
                                      const enet::BootstrapOptions& bopts, const ElasticNetOptions& opts = {});

FitResult fit_gradient_boost(const Panel& x, const Series& y, const BoostGrid& grid, std::uint64_t seed);

FitResult fit_feedforward(const Panel& x, const Series& y, const FeedForwardOptions& opts, std::uint64_t seed);

/// Versioned JSON document: kind, hyperparameters, flattened numeric state, seed, fingerprint.
nlohmann::json to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& doc);

/// Hyperparameters only, as a flat JSON object.
nlohmann::json hyperparameters_json(const FitResult& fit);

}  // namespace disagg
