#include "disagg/errors.hpp"
#include "disagg/feedforward.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace disagg;

TEST(Network, ValidationRows) {
    EXPECT_EQ(ffn::validation_rows(10, 0.2), 2);
    EXPECT_EQ(ffn::validation_rows(3, 0.2), 1);
    EXPECT_EQ(ffn::validation_rows(64, 0.2), 12);
}

TEST(Network, ActivationNames) {
    for (Activation a : {Activation::ReLU, Activation::Tanh, Activation::ELU, Activation::SELU, Activation::Swish}) {
        EXPECT_EQ(parse_activation(to_string(a)), a);
    }
    EXPECT_THROW(parse_activation("sigmoid"), std::invalid_argument);
}

TEST(Network, CandidatesStayInSearchSpace) {
    FeedForwardOptions o;
    o.trials = 40;
    const auto c = ffn::candidate_architectures(o, 3);
    ASSERT_EQ(c.size(), 40u);
    for (const auto& p : c) {
        ASSERT_GE(p.units.size(), 1u);
        ASSERT_LE(p.units.size(), 2u);
        for (int u : p.units) EXPECT_NE(std::find(o.unit_choices.begin(), o.unit_choices.end(), u), o.unit_choices.end());
        EXPECT_NE(std::find(o.dropout_choices.begin(), o.dropout_choices.end(), p.dropout), o.dropout_choices.end());
    }
    const auto again = ffn::candidate_architectures(o, 3);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c[i].units, again[i].units);
}

TEST(Network, ZeroHiddenLayersRejected) {
    NetworkParams p;
    p.units.clear();
    EXPECT_THROW(ffn::fit_fixed(Eigen::MatrixXd::Ones(10, 1), Eigen::VectorXd::LinSpaced(10, 0, 1), p, {}, 0),
                 std::invalid_argument);
}

TEST(Network, LearnsNoiselessLinearMap) {
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd x = testing_support::gaussian_matrix(80, 3, rng);
    const Eigen::VectorXd y = x * Eigen::Vector3d(0.5, -0.3, 0.2);
    FeedForwardOptions o;
    o.trials = 6;
    o.max_epochs = 1000;
    o.learning_rate = 1e-2;
    const NetworkState net = ffn::fit_search(x, y, o, 1);
    EXPECT_LT(net.val_mse, 1e-3);
    EXPECT_EQ(net.trials_run, 6);
}

TEST(Network, BitIdenticalForFixedSeed) {
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd x = testing_support::gaussian_matrix(40, 2, rng);
    const Eigen::VectorXd y = x.col(0) + 0.1 * testing_support::gaussian_vector(40, rng);
    FeedForwardOptions o;
    o.trials = 3;
    o.max_epochs = 200;
    const NetworkState a = ffn::fit_search(x, y, o, 42);
    const NetworkState b = ffn::fit_search(x, y, o, 42);
    EXPECT_EQ(a.params.units, b.params.units);
    EXPECT_EQ(a.val_mse, b.val_mse);
    EXPECT_EQ(ffn::predict(a, x), ffn::predict(b, x));
}

TEST(Network, DivergenceIsNumericalError) {
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd x = testing_support::gaussian_matrix(20, 2, rng);
    const Eigen::VectorXd y = testing_support::gaussian_vector(20, rng) * 1e200;
    FeedForwardOptions o;
    o.learning_rate = 10.0;
    EXPECT_THROW(ffn::fit_fixed(x, y, NetworkParams{}, o, 0), NumericalError);
}
