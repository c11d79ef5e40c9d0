#pragma once

#include "disagg/series.hpp"

#include <map>
#include <string>
#include <vector>

namespace disagg {

enum class TransformKind { LogDiff, Diff, Level };

std::string to_string(TransformKind kind);
TransformKind parse_transform_kind(const std::string& text);

/// Per-column transformation class. Lagged columns ("x_lag2") resolve to their base column.
class TransformSpec {
public:
    TransformSpec() = default;
    explicit TransformSpec(std::map<std::string, TransformKind> kinds) : kinds_(std::move(kinds)) {}

    void set(const std::string& column, TransformKind kind) { kinds_[column] = kind; }
    bool contains(const std::string& column) const;
    TransformKind kind(const std::string& column) const;
    bool is_differenced(const std::string& column) const { return kind(column) != TransformKind::Level; }
    const std::map<std::string, TransformKind>& kinds() const { return kinds_; }

private:
    std::map<std::string, TransformKind> kinds_;
};

enum class AdfDecision { UnitRoot, Stationary };

struct AdfResult {
    double statistic = 0.0;
    int lags = 0;
    std::size_t nobs = 0;
    double critical_1pct = 0.0;
    double critical_5pct = 0.0;
    double critical_10pct = 0.0;
    AdfDecision decision = AdfDecision::UnitRoot;
};

/// MacKinnon (2010) response-surface critical value for the constant-only ADF regression.
/// `level` is one of 0.01, 0.05, 0.10.
double adf_critical_value(double level, std::size_t nobs);

/// Augmented Dickey-Fuller test: OLS of dx_t on a constant, x_{t-1} and `max_lag` lagged
/// differences. The statistic is the t-ratio on x_{t-1}; the decision uses the 5% value.
AdfResult adf_test(const Series& series, int max_lag);

/// Differencing per column. Drops the first row panel-wide if any column is differenced.
Panel transform_panel(const Panel& panel, const TransformSpec& spec);

/// Monthly -> quarterly. Differenced columns are summed over the quarter, levels averaged.
/// Incomplete leading/trailing quarters are dropped with a warning.
Panel aggregate_quarterly(const Panel& monthly, const TransformSpec& spec);

/// Z-scores for Level columns using moments from the training rows only.
class Standardizer {
public:
    struct Moments {
        double mean = 0.0;
        double sd = 1.0;
    };

    Standardizer() = default;
    /// Fits moments (sample sd, n-1 denominator) for every Level column of `train`.
    static Standardizer fit(const Panel& train, const TransformSpec& spec);

    Panel apply(const Panel& panel) const;
    const std::map<std::string, Moments>& moments() const { return moments_; }

private:
    std::map<std::string, Moments> moments_;
};

struct StandardizedSplit {
    Panel train;
    Panel test;
    Standardizer standardizer;
};

StandardizedSplit fit_apply_standardizer(const Panel& train, const Panel& test, const TransformSpec& spec);

}  // namespace disagg
