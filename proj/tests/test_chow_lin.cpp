#include "disagg/chow_lin.hpp"
#include "disagg/errors.hpp"
#include "disagg/regressors.hpp"
#include "disagg/stats.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace disagg;

namespace {

Eigen::MatrixXd aggregator(long q) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(q, 3 * q);
    for (long i = 0; i < q; ++i) j.block(i, 3 * i, 1, 3).setOnes();
    return j;
}

Eigen::MatrixXd ar1_cov(double rho, long n) {
    Eigen::MatrixXd r(n, n);
    for (long i = 0; i < n; ++i)
        for (long k = 0; k < n; ++k) r(i, k) = std::pow(rho, std::abs(i - k)) / (1.0 - rho * rho);
    return r;
}

struct MonthlyData {
    Panel xm;
    Series yq;
};

MonthlyData monthly_data(std::uint64_t seed, double rho, long quarters) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const long t = 3 * quarters;
    Eigen::MatrixXd x(t, 2);
    std::vector<double> yq(static_cast<std::size_t>(quarters), 0.0);
    double u = g(rng) / std::sqrt(1.0 - rho * rho);
    for (long m = 0; m < t; ++m) {
        if (m > 0) u = rho * u + g(rng);
        x(m, 0) = g(rng);
        x(m, 1) = g(rng);
        yq[static_cast<std::size_t>(m / 3)] += 0.5 + x(m, 0) - 0.5 * x(m, 1) + u;
    }
    MonthlyData d;
    d.xm = Panel(Period::month(2000, 1), {"a", "b"}, x);
    d.yq = Series(Period::quarter(2000, 1), yq);
    return d;
}

}  // namespace

TEST(ChowLinCovariance, MatchesDirectConstruction) {
    for (double rho : {-0.6, 0.0, 0.4, 0.95}) {
        const Eigen::MatrixXd j = aggregator(5);
        const Eigen::MatrixXd r = ar1_cov(rho, 15);
        EXPECT_LT((chow_lin::quarterly_covariance(rho, 5) - j * r * j.transpose()).cwiseAbs().maxCoeff(), 1e-10) << rho;
        EXPECT_LT((chow_lin::monthly_quarterly_covariance(rho, 5) - r * j.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(ChowLinGls, RhoZeroIsOls) {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd x(40, 3);
    x.col(0).setOnes();
    x.rightCols(2) = testing_support::gaussian_matrix(40, 2, rng);
    const Eigen::VectorXd y = x * Eigen::Vector3d(1, 2, -1) + testing_support::gaussian_vector(40, rng);
    const auto fit = chow_lin::gls(x, y, 0.0);
    EXPECT_LT((fit.coef - stats::ols(x, y)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ChowLinGls, CollinearColumnIsRankDeficient) {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd x = testing_support::gaussian_matrix(20, 2, rng);
    x.col(1) = x.col(0);
    try {
        chow_lin::gls(x, testing_support::gaussian_vector(20, rng), 0.3);
        FAIL() << "expected rank deficient";
    } catch (const NumericalError& e) {
        EXPECT_STREQ(e.what(), "rank deficient");
    }
}

TEST(ChowLinEstimate, ProfileMaximumOverProbes) {
    const MonthlyData d = monthly_data(41, 0.6, 60);
    const FitResult f = fit_chow_lin(d.xm, d.yq);
    const auto& st = std::get<ChowLinState>(f.state);
    // Quarterly design as aggregated internally: constant 3, then 3-month sums.
    const Eigen::MatrixXd j = aggregator(60);
    Eigen::MatrixXd design(60, 3);
    design.col(0).setConstant(3.0);
    design.rightCols(2) = j * d.xm.data();
    const double best = chow_lin::profile_loglik(design, d.yq.vector(), st.rho);
    EXPECT_NEAR(best, st.loglik, 1e-9 * std::abs(best));
    for (int i = 0; i < 50; ++i) {
        const double rho = -0.99 + 1.98 * i / 49.0;
        EXPECT_GE(best + 1e-10, chow_lin::profile_loglik(design, d.yq.vector(), rho)) << rho;
    }
}

TEST(ChowLinEstimate, RecoversAr1Parameter) {
    int inside = 0;
    for (int s = 0; s < 10; ++s) {
        const MonthlyData d = monthly_data(1000 + s, 0.7, 200);
        const double rho = std::get<ChowLinState>(fit_chow_lin(d.xm, d.yq).state).rho;
        inside += rho > 0.5 && rho < 0.85;
    }
    EXPECT_GE(inside, 9);
}

TEST(ChowLinDistribute, SumsToQuarterly) {
    const MonthlyData d = monthly_data(5, 0.5, 30);
    const FitResult f = fit_chow_lin(d.xm, d.yq);
    const Series ym = chow_lin_distribute(f, d.xm, d.yq);
    ASSERT_EQ(ym.size(), 90u);
    for (std::size_t q = 0; q < 30; ++q) {
        EXPECT_NEAR(ym[3 * q] + ym[3 * q + 1] + ym[3 * q + 2], d.yq[q], 1e-9);
    }
}

TEST(ChowLinDistribute, ZeroResidualLeavesFit) {
    const Eigen::VectorXd fit = Eigen::VectorXd::LinSpaced(12, 0.1, 1.2);
    const Eigen::VectorXd y = aggregator(4) * fit;
    EXPECT_LT((chow_lin::distribute(fit, y, 0.8) - fit).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ChowLinDistribute, RhoZeroSplitsEqually) {
    const Eigen::VectorXd fit = Eigen::VectorXd::Zero(6);
    const Eigen::VectorXd out = chow_lin::distribute(fit, Eigen::Vector2d(3.0, -0.9), 0.0);
    for (int m = 0; m < 3; ++m) EXPECT_NEAR(out(m), 1.0, 1e-14);
    for (int m = 3; m < 6; ++m) EXPECT_NEAR(out(m), -0.3, 1e-14);
}

TEST(ChowLinDistribute, Misaligned) {
    EXPECT_THROW(chow_lin::distribute(Eigen::VectorXd::Zero(7), Eigen::Vector2d(1, 1), 0.1), std::invalid_argument);
    const MonthlyData d = monthly_data(5, 0.5, 12);
    const Panel shifted(Period::month(2000, 2), d.xm.names(), d.xm.data());
    EXPECT_THROW(fit_chow_lin(shifted, d.yq), std::invalid_argument);
}

TEST(ChowLinQuarterly, PredictIsLinear) {
    const auto d = testing_support::factor_design(3, 50, 3, 0, 0.3);
    RegressorSpec spec;
    const FitResult f = fit(spec, d.x, d.y);
    const auto& st = std::get<ChowLinState>(f.state);
    const Eigen::VectorXd direct = (d.x.data() * st.beta).array() + st.intercept;
    EXPECT_LT((predict(f, d.x).vector() - direct).cwiseAbs().maxCoeff(), 1e-12);
}
