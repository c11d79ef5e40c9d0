#pragma once

#include "disagg/config.hpp"
#include "disagg/csv.hpp"
#include "disagg/evaluate.hpp"
#include "disagg/explain.hpp"
#include "disagg/master.hpp"
#include "disagg/reconcile.hpp"
#include "disagg/regressors.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace disagg {

enum class Stage { Preprocess, Evaluate, Dm, Disaggregate, Explain, Theory };

std::string to_string(Stage s);
/// Stages run by a CLI subcommand ("all" expands to every stage).
std::vector<Stage> stages_for_command(const std::string& command);

/// Master file turned into aligned quarterly regressors and growth.
struct PreparedData {
    MasterData master;
    /// Transformed monthly indicators.
    Panel monthly;
    /// All complete-quarter aggregates (lags draw on quarters before the first growth value).
    Panel quarterly_full;
    /// Quarterly aggregates restricted to quarters with observed growth.
    Panel quarterly;
    Series growth;
};

PreparedData prepare_data(const RunConfig& cfg);
PreparedData prepare_data(const RunConfig& cfg, MasterData master);

struct Design {
    Panel x;
    Series y;
};

/// Quarterly design with `lag` quarterly lags, aligned with growth.
Design quarterly_design(const PreparedData& data, int lag);

/// Seed of the (regressor index, lag) cell.
std::uint64_t cell_seed(std::uint64_t master, std::size_t regressor_index, int lag);

struct CellResult {
    RegressorKind kind = RegressorKind::ChowLin;
    int lag = 0;
    WindowResult window;
    MetricSet metrics;
};

std::vector<CellResult> evaluate_cells(const RunConfig& cfg, const PreparedData& data);

struct QuarterCheck {
    Period quarter;
    double target = 0.0;
    double before = 0.0;
    double after = 0.0;
    /// target / before; NaN when undefined.
    double factor = 0.0;
};

struct Disaggregation {
    FitResult fit;
    /// Present for Elastic Net when bootstrapping is enabled.
    std::optional<enet::BootstrapSummary> bootstrap;
    Standardizer standardizer;
    Series tilde;
    Series growth;
    Series level;
    Series annualized;
    std::vector<bool> unconstrained;
    std::vector<QuarterCheck> quarters;
    double max_violation_before = 0.0;
    double max_violation_after = 0.0;
    double adjustment_norm = 0.0;
};

/// Full-sample fit (with hyperparameter search), monthly signal, reconciliation, levels.
Disaggregation disaggregate(const RunConfig& cfg, const PreparedData& data, const RegressorSpec& spec, int lag,
                            std::uint64_t seed);

/// Reconciles a monthly signal against quarterly growth in the configured mode.
Disaggregation reconcile_signal(const Series& tilde, const Series& growth, ReconcileMode mode, double base_level);

/// Records output files and their hashes for the manifest. Thread-safe.
class OutputRecorder {
public:
    explicit OutputRecorder(std::string dir) : dir_(std::move(dir)) {}
    const std::string& dir() const { return dir_; }
    std::string path(const std::string& name) const;
    void write_csv(const std::string& name, const CsvWriter& csv);
    void write_text(const std::string& name, const std::string& text);
    std::map<std::string, std::string> hashes() const;

private:
    std::string dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> hashes_;
};

struct PipelineResult {
    std::vector<Stage> completed;
    std::vector<CellResult> cells;
    nlohmann::json manifest;
    /// Verdict lines from the theory stage.
    std::vector<std::string> verdicts;
};

/// Runs the stages in order and writes artifacts plus manifest.json to cfg.output_dir. On a
/// stage failure the manifest records partial completion and the error is rethrown.
PipelineResult run_pipeline(const RunConfig& cfg, const std::vector<Stage>& stages);

}  // namespace disagg
