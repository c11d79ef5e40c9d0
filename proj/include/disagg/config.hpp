#pragma once

#include "disagg/evaluate.hpp"
#include "disagg/explain.hpp"
#include "disagg/master.hpp"
#include "disagg/preprocess.hpp"
#include "disagg/regressors.hpp"
#include "disagg/theorylab.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace disagg {

inline constexpr int kConfigVersion = 1;

enum class ReconcileMode { Ma5, Denton };

std::string to_string(ReconcileMode m);
ReconcileMode parse_reconcile_mode(const std::string& text);

struct ExplainConfig {
    bool enabled = true;
    /// Regressor kinds to explain; empty means all configured regressors.
    std::vector<RegressorKind> regressors;
    /// "auto" picks exact up to the exact-mode feature limit, sampled beyond.
    std::string mode = "auto";
    int permutations = 64;
    std::size_t max_background = 100;
    std::size_t top = 10;
};

struct TheoryConfig {
    theory::RegimeDgpSpec regime;
    int regime_seeds = 100;
    theory::RidgeCurveSpec ridge;
};

struct RunConfig {
    std::string country = "us";
    /// Relative paths resolve against the config file's directory. "{country}" is substituted.
    std::string master_file = "master_{country}.csv";
    MasterSchema schema;
    TransformSpec transforms;
    int adf_max_lag = 4;
    std::vector<int> lags{0, 1, 2};
    std::vector<RegressorSpec> regressors;
    WindowProtocol window;
    ReconcileMode reconciliation = ReconcileMode::Ma5;
    /// Bootstrap replications for the final Elastic Net disaggregation coefficients (0 disables).
    int bootstrap_replications = 5000;
    /// Base level for the recovered monthly GDP; defaults to the first GDP level.
    std::optional<double> base_level;
    ExplainConfig explain;
    std::optional<int> dm_bandwidth;
    TheoryConfig theory;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    /// Directory of the config file, for resolving relative paths.
    std::string base_dir = ".";

    std::string master_path() const;
};

/// Validates and fills defaults. Unknown keys are rejected so typos do not pass silently.
RunConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Canonical JSON rendering of every field (used for the manifest hash).
nlohmann::json config_to_json(const RunConfig& cfg);

/// Every master indicator must carry a transform kind.
void validate_against_master(const RunConfig& cfg, const MasterData& master);

}  // namespace disagg
