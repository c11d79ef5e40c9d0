#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace disagg::theory {

/// Y = (1-s) b1'X + s b2'X + e with s ~ Bernoulli(pi) independent of noise, and
/// X | s ~ N(mean_s, x_sd^2 I).
struct RegimeDgpSpec {
    Eigen::VectorXd beta1;
    Eigen::VectorXd beta2;
    double pi = 0.5;
    double sigma_eps = 0.1;
    /// Empty means zero.
    Eigen::VectorXd mean_normal;
    Eigen::VectorXd mean_crisis;
    double x_sd = 1.0;
    std::size_t n = 100000;
    std::uint64_t seed = 0;
};

struct RegimeBiasResult {
    Eigen::VectorXd beta_ols;
    /// Heteroskedasticity-robust standard errors of beta_ols.
    Eigen::VectorXd beta_se;
    /// (1-pi) b1 + pi b2.
    Eigen::VectorXd beta_bar;
    /// Population OLS limit E[XX']^{-1} E[XX' b(s)]; equals beta_bar when the regime means coincide.
    Eigen::VectorXd beta_limit;
    /// (1-pi)(b2-b1)'E[X|s=1].
    double crisis_bias_formula = 0.0;
    /// Mean OLS residual over crisis draws; NaN without crisis draws.
    double crisis_bias_empirical = 0.0;
    double crisis_bias_se = 0.0;
    std::size_t crisis_draws = 0;
    std::vector<std::string> warnings;
};

/// No-intercept OLS of Y on X for one simulated sample.
RegimeBiasResult simulate_regime_bias(const RegimeDgpSpec& spec);

struct RidgeCurveSpec {
    /// Eigenvalues of X'X.
    Eigen::VectorXd d;
    /// Rotated coefficients V'beta.
    Eigen::VectorXd alpha;
    double sigma2 = 1.0;
    std::vector<double> lambdas;
    /// Monte Carlo check at this lambda when set.
    std::optional<double> mc_lambda;
    int mc_reps = 2000;
    /// Rows of the simulated design.
    long mc_rows = 20;
    std::uint64_t seed = 0;
};

struct RidgeMonteCarlo {
    double lambda = 0.0;
    double mse = 0.0;
    double standard_error = 0.0;
    int reps = 0;
};

struct RidgeCurveResult {
    std::vector<double> lambdas;
    std::vector<double> mse;
    double lambda_star = 0.0;
    double mse_star = 0.0;
    /// One-sided finite difference at the first positive grid step.
    double slope_at_zero = 0.0;
    /// -2 sigma^2 sum d^-2.
    double analytic_slope_at_zero = 0.0;
    std::optional<RidgeMonteCarlo> monte_carlo;
};

/// sum_j (sigma^2 d_j + lambda^2 alpha_j^2) / (d_j + lambda)^2.
double ridge_mse(const Eigen::VectorXd& d, const Eigen::VectorXd& alpha, double sigma2, double lambda);

RidgeCurveResult ridge_mse_curve(const RidgeCurveSpec& spec);

/// Averages ||beta_hat_lambda - beta||^2 over simulated Y = X beta + e with a fixed design
/// whose X'X = diag(d).
RidgeMonteCarlo ridge_monte_carlo(const RidgeCurveSpec& spec, double lambda);

}  // namespace disagg::theory

namespace disagg::theory {

struct RegimeStudy {
    int seeds = 0;
    /// Seeds with |beta_ols - beta_bar| < 3 se in every coordinate.
    int consistent = 0;
    /// Same against the population OLS limit.
    int consistent_limit = 0;
    double crisis_bias_formula = 0.0;
    /// Mean over seeds of the empirical crisis bias and its Monte Carlo standard error.
    double crisis_bias_mean = 0.0;
    double crisis_bias_se = 0.0;
    Eigen::VectorXd beta_bar;
    Eigen::VectorXd beta_limit;
    /// Per-seed estimates (seeds x p).
    Eigen::MatrixXd beta_ols;

    double consistency_rate() const { return seeds > 0 ? static_cast<double>(consistent) / seeds : 0.0; }
    bool bias_matches_formula() const;
};

/// Repeats simulate_regime_bias over seeds spec.seed + s, s < seeds.
RegimeStudy regime_bias_study(const RegimeDgpSpec& spec, int seeds);

}  // namespace disagg::theory
