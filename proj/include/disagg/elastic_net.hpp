#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace disagg {

struct ElasticNetParams {
    /// Overall penalty strength; lambda1 = alpha*l1_ratio, lambda2 = alpha*(1-l1_ratio).
    double alpha = 1.0;
    double l1_ratio = 0.5;
};

struct ElasticNetOptions {
    std::vector<double> l1_ratios{0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99, 1.0};
    int n_alphas = 100;
    double alpha_min_ratio = 1e-4;
    int folds = 5;
    int max_sweeps = 100000;
    double tol = 1e-10;
    /// Looser tolerance for the cross-validation paths; the selected model is refit at `tol`.
    double cv_tol = 1e-7;
};

struct ElasticNetState {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    ElasticNetParams params;
    double cv_mse = 0.0;
    int sweeps = 0;
};

namespace enet {

/// Objective  sum (y - Xb)^2 + l1 |b|_1 + l2 |b|^2  (no intercept; callers center).
double objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& b, double l1, double l2);

double soft_threshold(double z, double gamma);

struct CdResult {
    Eigen::VectorXd coef;
    int sweeps = 0;
    double max_change = 0.0;
};

/// Cyclic coordinate descent on `objective`. `trace`, when given, receives the objective
/// after every sweep. Throws NumericalError if `max_sweeps` is exhausted.
CdResult coordinate_descent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1, double l2,
                            const Eigen::VectorXd& init, int max_sweeps, double tol,
                            std::vector<double>* trace = nullptr);

/// Centering/scaling applied before the penalized fit. Columns with zero spread get scale 0
/// and are held at a zero coefficient.
struct Scaling {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;  // population standard deviation
    double y_mean = 0.0;
};

Scaling scaling_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Smallest alpha that zeroes every slope at the given mixing ratio (l1_ratio > 0).
double alpha_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1_ratio);

/// Log-spaced path from alpha_max down to min_ratio*alpha_max.
std::vector<double> alpha_path(double alpha_max, int n, double min_ratio);

/// Fit at fixed (alpha, l1_ratio) on internally standardized columns; coefficients on the
/// original scale.
ElasticNetState fit_fixed(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElasticNetParams& params,
                          const ElasticNetOptions& opts);

/// K-fold CV over l1_ratios x alpha path; refits the winner on all rows.
ElasticNetState fit_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElasticNetOptions& opts);

/// Contiguous K-fold boundaries: fold f covers [bounds[f], bounds[f+1]).
std::vector<long> fold_bounds(long n, int folds);

struct BootstrapOptions {
    int replications = 5000;
    std::uint64_t seed = 0;
    /// Central coverage of the percentile intervals.
    double coverage = 0.95;
    /// Use the identity resample for every replication (no resampling variation).
    bool identity_resample = false;
};

struct BootstrapSummary {
    /// Element 0 is the intercept, then the slopes.
    Eigen::VectorXd mean;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    int used = 0;
    int skipped = 0;
};

/// Row-resampled refits at fixed hyperparameters.
BootstrapSummary bootstrap(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElasticNetParams& params,
                           const ElasticNetOptions& opts, const BootstrapOptions& bopts);

}  // namespace enet

}  // namespace disagg
