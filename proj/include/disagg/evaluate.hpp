#pragma once

#include "disagg/preprocess.hpp"
#include "disagg/regressors.hpp"
#include "disagg/series.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace disagg {

struct WindowProtocol {
    double initial_ratio = 0.5;
    /// Overrides the ratio with a fixed number of initial training rows.
    std::optional<std::size_t> initial_window;
    /// Runs with more failed steps than this fraction are an error.
    double max_failed_fraction = 0.2;
    /// Level columns are z-scored per step with training-row moments. Empty spec: no scaling.
    TransformSpec transforms;
    unsigned workers = 1;
};

struct StepRecord {
    Period target;
    std::size_t train_rows = 0;
    double prediction = 0.0;
    double actual = 0.0;
    bool failed = false;
    bool searched = false;
    std::string error;
    std::uint64_t fingerprint = 0;
};

struct WindowResult {
    Series predictions;
    Series actuals;
    std::vector<StepRecord> steps;
    /// Fit of the step where hyperparameters were searched.
    FitResult tuned;
    std::size_t failed_steps = 0;
};

/// Initial training size t0 for N rows.
std::size_t initial_window(std::size_t n, const WindowProtocol& protocol);

/// One-step-ahead predictions for rows t0..N-1 (0-based) from fits on rows [0, t).
/// The search runs at the first step; later steps reuse its hyperparameters. Step t uses
/// seed spec.seed + t.
WindowResult run_expanding_window(const RegressorSpec& spec, const Panel& x, const Series& y,
                                  const WindowProtocol& protocol = {});

struct MetricSet {
    double rmse = 0.0;
    double mae = 0.0;
    /// NaN when the actuals have zero variance.
    double r2 = 0.0;
    double correlation = 0.0;
    double sign_accuracy = 0.0;
    std::size_t n = 0;
};

/// Pairs are matched by period; pairs with a missing side are dropped.
MetricSet compute_metrics(const Series& predictions, const Series& actuals);

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int bandwidth = 0;
    bool degenerate = false;
    std::size_t n = 0;
};

int default_bandwidth(std::size_t t);

/// Squared-error loss differential e1^2 - e2^2 with a Bartlett-kernel long-run variance.
/// Negative statistics favour the first series.
DmResult dm_test(const Series& errors_1, const Series& errors_2, std::optional<int> bandwidth = std::nullopt);

/// prediction - actual, NaN where the prediction is missing.
Series forecast_errors(const WindowResult& result);

struct DmEntry {
    std::string model_1;
    std::string model_2;
    DmResult result;
};

/// All ordered pairs i < j of the named error series.
std::vector<DmEntry> dm_matrix(const std::vector<std::pair<std::string, Series>>& errors,
                               std::optional<int> bandwidth = std::nullopt);

}  // namespace disagg
