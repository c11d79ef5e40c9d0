#pragma once

#include "disagg/regressors.hpp"
#include "disagg/series.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace disagg {

enum class ShapleyMode { Exact, Sampled };

struct ShapleyOptions {
    ShapleyMode mode = ShapleyMode::Exact;
    /// Permutations per observation in sampled mode.
    int permutations = 10000;
    std::uint64_t seed = 0;
    /// Background rows beyond this are thinned to evenly spaced rows.
    std::size_t max_background = 100;
    unsigned workers = 1;
};

inline constexpr int kMaxExactFeatures = 15;

struct Attribution {
    std::vector<std::string> features;
    std::vector<Period> observations;
    /// Mean background prediction.
    double base = 0.0;
    /// observations x features.
    Eigen::MatrixXd phi;
    /// Model prediction for each observation.
    Eigen::VectorXd prediction;
};

/// Interventional Shapley values: v(S) averages the model over background rows with the
/// features in S replaced by the observation's values.
Attribution shapley_attributions(const FitResult& fit, const Panel& x, const Panel& background,
                                 const ShapleyOptions& opts = {});

/// Generic form over any row-wise model f: (rows x k) -> rows.
using BatchModel = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
Attribution shapley_attributions(const BatchModel& f, const Panel& x, const Panel& background,
                                 const ShapleyOptions& opts = {});

/// Evenly spaced rows i*n/cap for i < cap when n > cap.
Panel thin_background(const Panel& background, std::size_t cap);

struct FeatureImportance {
    std::string feature;
    double mean_abs_phi = 0.0;
};

/// Features ordered by mean |phi| (descending; ties by name), at most `top` entries.
std::vector<FeatureImportance> importance_ranking(const Attribution& a, std::size_t top = 10);

}  // namespace disagg
