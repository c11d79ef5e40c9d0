#pragma once

#include <Eigen/Dense>

#include <vector>

namespace disagg {

struct ChowLinOptions {
    bool intercept = true;
    /// Search interval for rho is [-rho_bound, rho_bound].
    double rho_bound = 0.999;
    /// Coarse grid points scanned before Brent refinement.
    int grid_points = 21;
};

/// Chow-Lin GLS with AR(1) monthly residuals aggregated by 3-month sums.
struct ChowLinState {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    double rho = 0.0;
    /// Innovation variance sigma^2_eps, concentrated out of the likelihood.
    double sigma2 = 0.0;
    double loglik = 0.0;
    bool has_intercept = true;
    /// True when fitted on monthly regressors: the intercept is per month, so quarterly
    /// predictions add it three times.
    bool intercept_per_month = false;
    bool at_boundary = false;
};

namespace chow_lin {

/// Quarterly covariance J R(rho) J' (Q x Q) where R has entries rho^|i-j| / (1 - rho^2)
/// over 3Q months; sigma^2 is factored out.
Eigen::MatrixXd quarterly_covariance(double rho, long quarters);

/// Monthly covariance R(rho) J' (3Q x Q) used to distribute quarterly residuals.
Eigen::MatrixXd monthly_quarterly_covariance(double rho, long quarters);

struct GlsFit {
    Eigen::VectorXd coef;
    double sigma2 = 0.0;
    double loglik = 0.0;
};

/// GLS at a fixed rho for a quarterly design (columns as given, no intercept added),
/// with the concentrated Gaussian log-likelihood. Throws "rank deficient" on a singular design.
GlsFit gls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double rho);

/// Concentrated log-likelihood profile l(rho).
double profile_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double rho);

/// Grid scan followed by Brent refinement of l(rho) over [-bound, bound]. With
/// `opts.intercept` a constant column equal to `intercept_scale` is prepended (1 for a
/// quarterly design, 3 for a monthly design aggregated by sums).
ChowLinState estimate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ChowLinOptions& opts,
                      double intercept_scale = 1.0);

/// X_m beta + R J' Omega^{-1} (Y - J X_m beta) for monthly predictions `monthly_fit` (3Q rows).
Eigen::VectorXd distribute(const Eigen::VectorXd& monthly_fit, const Eigen::VectorXd& y_quarterly, double rho);

}  // namespace chow_lin

}  // namespace disagg
