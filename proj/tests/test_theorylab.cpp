#include "disagg/log.hpp"
#include "disagg/theorylab.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace disagg::theory;

namespace {

RidgeCurveSpec unit_ridge() {
    RidgeCurveSpec s;
    s.d = Eigen::Vector2d(1, 1);
    s.alpha = Eigen::Vector2d(1, 1);
    s.sigma2 = 1.0;
    for (int i = 0; i <= 500; ++i) s.lambdas.push_back(i * 0.01);
    return s;
}

RegimeDgpSpec scalar_regime() {
    RegimeDgpSpec s;
    s.beta1 = Eigen::VectorXd::Constant(1, 0.0);
    s.beta2 = Eigen::VectorXd::Constant(1, 2.0);
    s.mean_normal = Eigen::VectorXd::Constant(1, 1.0);
    s.mean_crisis = Eigen::VectorXd::Constant(1, 1.0);
    s.n = 20000;
    return s;
}

}  // namespace

TEST(Ridge, ClosedFormValues) {
    const Eigen::Vector2d one(1, 1);
    EXPECT_EQ(ridge_mse(one, one, 1.0, 0.0), 2.0);
    EXPECT_EQ(ridge_mse(one, one, 1.0, 1.0), 1.0);
    // 2(1 + l^2)/(1 + l)^2 on the unit problem.
    EXPECT_NEAR(ridge_mse(one, one, 1.0, 0.5), 2 * 1.25 / 2.25, 1e-15);
    EXPECT_NEAR(ridge_mse(Eigen::Vector2d(2, 0.5), Eigen::Vector2d(1, -2), 0.5, 0.3), 1.1591741493383743, 1e-15);
}

TEST(Ridge, LimitsAndNoiseless) {
    const Eigen::Vector2d d(2, 0.5), a(1, -2);
    EXPECT_NEAR(ridge_mse(d, a, 0.5, 1e9), a.squaredNorm(), 1e-6);
    EXPECT_EQ(ridge_mse(d, a, 0.0, 0.0), 0.0);
    EXPECT_GT(ridge_mse(d, a, 0.0, 0.1), 0.0);
}

TEST(Ridge, CurveFindsInteriorMinimum) {
    const RidgeCurveResult r = ridge_mse_curve(unit_ridge());
    EXPECT_EQ(r.mse.front(), 2.0);
    EXPECT_NEAR(r.lambda_star, 1.0, 1e-12);
    EXPECT_EQ(r.mse_star, 1.0);
    EXPECT_EQ(r.analytic_slope_at_zero, -4.0);
    EXPECT_LT(r.slope_at_zero, 0.0);
    // Forward difference over the first grid step.
    const double h = r.lambdas[1];
    EXPECT_NEAR(r.slope_at_zero, (2.0 * (1.0 + h * h) / ((1.0 + h) * (1.0 + h)) - 2.0) / h, 1e-12);
}

TEST(Ridge, CurveSlopeGeneralCase) {
    RidgeCurveSpec s = unit_ridge();
    s.d = Eigen::Vector2d(2, 0.5);
    s.alpha = Eigen::Vector2d(1, -2);
    s.sigma2 = 0.5;
    EXPECT_EQ(ridge_mse_curve(s).analytic_slope_at_zero, -4.25);
}

TEST(Ridge, Validation) {
    RidgeCurveSpec s = unit_ridge();
    s.d(1) = 0.0;
    EXPECT_THROW(ridge_mse_curve(s), std::invalid_argument);
    s = unit_ridge();
    s.lambdas = {0.5, 1.0};
    EXPECT_THROW(ridge_mse_curve(s), std::invalid_argument);
}

TEST(Ridge, MonteCarloAgreesWithFormula) {
    RidgeCurveSpec s = unit_ridge();
    s.d = Eigen::Vector2d(2, 0.5);
    s.alpha = Eigen::Vector2d(1, -2);
    s.sigma2 = 0.5;
    s.mc_reps = 4000;
    for (double l : {0.0, 0.3, 2.0}) {
        const RidgeMonteCarlo mc = ridge_monte_carlo(s, l);
        EXPECT_LT(std::abs(mc.mse - ridge_mse(s.d, s.alpha, s.sigma2, l)), 3.0 * mc.standard_error) << l;
    }
}

TEST(Regime, FormulaValues) {
    const RegimeBiasResult r = simulate_regime_bias(scalar_regime());
    EXPECT_EQ(r.beta_bar(0), 1.0);
    EXPECT_EQ(r.crisis_bias_formula, 1.0);
    EXPECT_NEAR(r.beta_limit(0), 1.0, 1e-15);
    EXPECT_GT(r.crisis_draws, 9000u);
    EXPECT_LT(std::abs(r.beta_ols(0) - 1.0), 5 * r.beta_se(0));
}

TEST(Regime, DistinctMeansMoveTheLimit) {
    // E[X|s=0] = 0: the limit is E[XX' b(s)] / E[XX'] = (0.5*2*2) / (0.5*1 + 0.5*2) = 4/3.
    RegimeDgpSpec s = scalar_regime();
    s.mean_normal = Eigen::VectorXd::Constant(1, 0.0);
    const RegimeBiasResult r = simulate_regime_bias(s);
    EXPECT_NEAR(r.beta_limit(0), 4.0 / 3.0, 1e-14);
    EXPECT_LT(std::abs(r.beta_ols(0) - 4.0 / 3.0), 5 * r.beta_se(0));
}

TEST(Regime, NoCrisisDraws) {
    RegimeDgpSpec s = scalar_regime();
    s.pi = 0.0;
    std::vector<std::string> seen;
    const auto old = disagg::log::set_sink([&](const std::string& m) { seen.push_back(m); });
    const RegimeBiasResult r = simulate_regime_bias(s);
    disagg::log::set_sink(old);
    EXPECT_EQ(r.beta_bar(0), 0.0);
    EXPECT_EQ(r.crisis_bias_formula, 2.0);
    EXPECT_EQ(r.crisis_draws, 0u);
    EXPECT_TRUE(std::isnan(r.crisis_bias_empirical));
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_EQ(r.warnings[0], "crisis regime underrepresented");
    EXPECT_EQ(seen.size(), 1u);
}

TEST(Regime, EqualCoefficientsHaveNoBias) {
    RegimeDgpSpec s = scalar_regime();
    s.beta2 = s.beta1;
    const RegimeStudy st = regime_bias_study(s, 20);
    EXPECT_EQ(st.crisis_bias_formula, 0.0);
    EXPECT_LT(std::abs(st.crisis_bias_mean), 3.0 * st.crisis_bias_se);
}

TEST(Regime, StudyUsesConsecutiveSeeds) {
    RegimeDgpSpec s = scalar_regime();
    s.seed = 40;
    const RegimeStudy st = regime_bias_study(s, 3);
    s.seed = 42;
    EXPECT_EQ(st.beta_ols(2, 0), simulate_regime_bias(s).beta_ols(0));
    EXPECT_THROW(regime_bias_study(s, 1), std::invalid_argument);
}
