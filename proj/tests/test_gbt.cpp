#include "disagg/gradient_boost.hpp"
#include "disagg/regressors.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace disagg;

namespace {

Eigen::MatrixXd grid_x(int n) {
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = i - n / 2 + 0.5;
    return x;
}

Eigen::VectorXd step(const Eigen::MatrixXd& x) { return (x.col(0).array() > 0.0).cast<double>(); }

BoostParams stump() {
    BoostParams p;
    p.max_depth = 1;
    p.trees = 1;
    p.learning_rate = 1.0;
    p.leaf_l2 = 0.0;
    return p;
}

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).squaredNorm() / a.size(); }

}  // namespace

TEST(Boost, StumpRecoversStep) {
    const Eigen::MatrixXd x = grid_x(10);
    const Eigen::VectorXd y = step(x);
    const BoostState m = gbt::train(x, y, stump(), 1);
    EXPECT_EQ(m.base_score, 0.5);
    ASSERT_EQ(m.trees.size(), 1u);
    EXPECT_EQ(m.trees[0].nodes[0].feature, 0);
    EXPECT_LT((gbt::predict(m, x) - y).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Boost, LeafPenaltyShrinksLeaves) {
    // Leaf weight -G/(H + lambda): five residuals of -0.5 with lambda 1 give -2.5/6.
    const Eigen::MatrixXd x = grid_x(10);
    BoostParams p = stump();
    p.leaf_l2 = 1.0;
    const Eigen::VectorXd pred = gbt::predict(gbt::train(x, step(x), p, 1), x);
    EXPECT_NEAR(pred(0), 0.5 - 2.5 / 6.0, 1e-15);
    EXPECT_NEAR(pred(9), 0.5 + 2.5 / 6.0, 1e-15);
}

TEST(Boost, ShrinkageCompounds) {
    // Two stumps at lr 0.1: 0.5 -/+ 0.05, then -/+ 0.045.
    const Eigen::MatrixXd x = grid_x(10);
    BoostParams p = stump();
    p.learning_rate = 0.1;
    p.trees = 2;
    const Eigen::VectorXd pred = gbt::predict(gbt::train(x, step(x), p, 1), x);
    EXPECT_NEAR(pred(0), 0.405, 1e-14);
    EXPECT_NEAR(pred(9), 0.595, 1e-14);
}

TEST(Boost, ConstantTarget) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd x = testing_support::gaussian_matrix(20, 3, rng);
    const BoostState m = gbt::train(x, Eigen::VectorXd::Constant(20, 4.25), BoostParams{}, 3);
    EXPECT_EQ(m.base_score, 4.25);
    const Eigen::VectorXd p = gbt::predict(m, x);
    for (long i = 0; i < p.size(); ++i) EXPECT_EQ(p(i), 4.25);
}

TEST(Boost, LowerLearningRateFitsLess) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::MatrixXd x = testing_support::gaussian_matrix(60, 4, rng);
        const Eigen::VectorXd y = x.col(0).array().square() + testing_support::gaussian_vector(60, rng).array();
        BoostParams p;
        p.trees = 30;
        p.learning_rate = 0.1;
        const double slow = mse(gbt::predict(gbt::train(x, y, p, 5), x), y);
        p.learning_rate = 1.0;
        const double fast = mse(gbt::predict(gbt::train(x, y, p, 5), x), y);
        EXPECT_GE(slow, fast);
    }
}

TEST(Boost, MemorizesTrainingRows) {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = testing_support::gaussian_matrix(40, 3, rng);
    const Eigen::VectorXd y = testing_support::gaussian_vector(40, rng);
    BoostParams p;
    p.max_depth = 6;
    p.learning_rate = 1.0;
    p.trees = 200;
    p.leaf_l2 = 0.0;
    EXPECT_LT(mse(gbt::predict(gbt::train(x, y, p, 1), x), y), 1e-8);
}

TEST(Boost, SeededSubsampling) {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd x = testing_support::gaussian_matrix(50, 3, rng);
    const Eigen::VectorXd y = x.col(0) + testing_support::gaussian_vector(50, rng);
    BoostParams p;
    p.subsample = 0.7;
    const Eigen::VectorXd a = gbt::predict(gbt::train(x, y, p, 10), x);
    EXPECT_EQ(a, gbt::predict(gbt::train(x, y, p, 10), x));
    EXPECT_NE(a, gbt::predict(gbt::train(x, y, p, 11), x));
}

TEST(Boost, CvValidation) {
    BoostGrid g;
    EXPECT_EQ(g.size(), 432u);
    g.folds = 5;
    EXPECT_THROW(gbt::fit_cv(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, 2, 3), g, 0), std::invalid_argument);
    BoostParams bad;
    bad.subsample = 0.0;
    EXPECT_THROW(gbt::train(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, 2, 3), bad, 0), std::invalid_argument);
}

TEST(Boost, CvPicksAGridPoint) {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd x = testing_support::gaussian_matrix(40, 2, rng);
    const Eigen::VectorXd y = step(x) + 0.1 * testing_support::gaussian_vector(40, rng);
    BoostGrid g;
    g.max_depth = {1, 2};
    g.learning_rate = {0.1, 0.3};
    g.trees = {20};
    g.subsample = {1.0};
    g.leaf_l2 = {1.0};
    g.min_child_weight = {1.0};
    const BoostState m = gbt::fit_cv(x, y, g, 7);
    EXPECT_TRUE(m.params.max_depth == 1 || m.params.max_depth == 2);
    EXPECT_EQ(m.params.trees, 20);
    EXPECT_EQ(m.trees.size(), 20u);
    EXPECT_GT(m.cv_mse, 0.0);
}
