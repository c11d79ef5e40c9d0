#pragma once

#include "disagg/series.hpp"

#include <Eigen/Dense>

#include <vector>

namespace disagg {

/// Weights of the five-term moving average, most recent month first.
inline constexpr double kMa5Weights[5] = {1.0 / 3.0, 2.0 / 3.0, 1.0, 2.0 / 3.0, 1.0 / 3.0};

/// Stacked MA(5) aggregation constraints M y = z over T months.
struct ConstraintSystem {
    /// Q' x T.
    Eigen::MatrixXd m;
    /// Observed quarterly growth per row; empty for a skeleton.
    Eigen::VectorXd z;
    /// 1-based month index of the last month of each constrained quarter.
    std::vector<long> quarter_ends;
    /// Calendar quarter of each row (set by make_constraint_system).
    std::vector<Period> quarters;
    /// First month of the monthly range (set by make_constraint_system).
    Period first_month;

    long months() const { return m.cols(); }
    long rows() const { return m.rows(); }
};

/// M for T = n_months. Rows are emitted for the quarter ends m >= 5 (1-based); earlier ends
/// are skipped. Ends must increase in steps of 3 and lie within [1, T].
ConstraintSystem build_constraint_matrix(long n_months, const std::vector<long>& quarter_ends);

/// Constraint system for a monthly range [first_month, first_month + n_months) and observed
/// quarterly growth. Quarters with an observation whose full window lies in range get a row.
ConstraintSystem make_constraint_system(Period first_month, long n_months, const Series& y_quarterly);

/// y_hat = y_tilde + M' (M M')^{-1} (z - M y_tilde).
Eigen::VectorXd reconcile_min_norm(const Eigen::VectorXd& tilde_y, const ConstraintSystem& system);
Series reconcile_min_norm(const Series& tilde_y, const ConstraintSystem& system);

/// Scales every month of a quarter by k_q = total_q / sum(tilde_y over q). Months of quarters
/// that are not fully inside the series or have no total are left unchanged.
Series denton_proportional(const Series& tilde_y, const Series& quarterly_totals);

/// k_q = z_q / (M y_tilde)_q; NaN where the aggregate is zero.
Eigen::VectorXd adjustment_factors(const Eigen::VectorXd& tilde_y, const ConstraintSystem& system);

struct ReconcileDiagnostics {
    Eigen::VectorXd adjustment_factors;
    double max_violation_before = 0.0;
    double max_violation_after = 0.0;
    double adjustment_norm = 0.0;
    /// Per month: true when the month's quarter carries no constraint row.
    std::vector<bool> unconstrained;
};

ReconcileDiagnostics diagnose(const Eigen::VectorXd& tilde_y, const Eigen::VectorXd& hat_y,
                              const ConstraintSystem& system);

/// Level_m = Level_{m-1} * exp(hat_y_m), Level_0 = base_level.
Series recover_levels(const Series& hat_y, double base_level);

/// (1/3 y_t + 2/3 y_{t-1} + y_{t-2} + 2/3 y_{t-3} + 1/3 y_{t-4}) * 400; first four values NaN.
Series annualize(const Series& hat_y);

}  // namespace disagg
