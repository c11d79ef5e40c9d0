#include "disagg/regressors.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace disagg;

namespace {

RegressorSpec quick(RegressorKind kind) {
    RegressorSpec s;
    s.kind = kind;
    s.seed = 17;
    s.elastic_net.l1_ratios = {0.5, 1.0};
    s.elastic_net.n_alphas = 15;
    s.boost.max_depth = {2};
    s.boost.learning_rate = {0.1};
    s.boost.trees = {30};
    s.boost.subsample = {0.85};
    s.boost.leaf_l2 = {1.0};
    s.boost.min_child_weight = {1.0};
    s.feedforward.trials = 2;
    s.feedforward.max_epochs = 100;
    return s;
}

const RegressorKind kAll[] = {RegressorKind::ChowLin, RegressorKind::ElasticNet, RegressorKind::GradientBoost,
                              RegressorKind::FeedForward};

}  // namespace

TEST(Regressors, KindNames) {
    for (RegressorKind k : kAll) EXPECT_EQ(parse_regressor_kind(to_string(k)), k);
    EXPECT_THROW(parse_regressor_kind("svm"), std::invalid_argument);
}

TEST(Regressors, JsonRoundTripPredictsIdentically) {
    const auto d = testing_support::factor_design(12, 40, 3, 1, 0.5);
    for (RegressorKind k : kAll) {
        const FitResult f = fit(quick(k), d.x, d.y);
        const nlohmann::json doc = to_json(f);
        const FitResult back = fit_from_json(nlohmann::json::parse(doc.dump()));
        EXPECT_EQ(back.kind, k);
        EXPECT_EQ(back.columns, f.columns);
        EXPECT_EQ(back.fingerprint, f.fingerprint);
        EXPECT_EQ(predict(back, d.x).values(), predict(f, d.x).values()) << to_string(k);
        EXPECT_EQ(to_json(back).dump(), doc.dump());
        // Chow-Lin has no tuned hyperparameters.
        EXPECT_EQ(hyperparameters_json(f).empty(), k == RegressorKind::ChowLin);
    }
}

TEST(Regressors, DeterministicSerialization) {
    const auto d = testing_support::factor_design(13, 40, 3, 0, 0.5);
    for (RegressorKind k : kAll) {
        EXPECT_EQ(to_json(fit(quick(k), d.x, d.y)).dump(), to_json(fit(quick(k), d.x, d.y)).dump()) << to_string(k);
    }
}

TEST(Regressors, PredictShapeAndColumns) {
    const auto d = testing_support::factor_design(14, 30, 3, 0, 0.5);
    for (RegressorKind k : kAll) {
        const FitResult f = fit(quick(k), d.x, d.y);
        EXPECT_EQ(predict(f, d.x.slice_rows(5, 7)).size(), 7u);
        EXPECT_EQ(predict(f, d.x.slice_rows(5, 7)).start(), d.x.period(5));
    }
    const FitResult f = fit(quick(RegressorKind::ChowLin), d.x, d.y);
    try {
        predict(f, d.x.select({"x0", "x2"}));
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("x1"), std::string::npos);
    }
}

TEST(Regressors, RefitKeepsHyperparameters) {
    const auto d = testing_support::factor_design(15, 50, 3, 0, 0.5);
    const RegressorSpec s = quick(RegressorKind::ElasticNet);
    const FitResult tuned = fit(s, d.x.slice_rows(0, 30), d.y.slice(0, 30));
    const FitResult again = refit(s, tuned, d.x, d.y, 3);
    EXPECT_EQ(hyperparameters_json(tuned), hyperparameters_json(again));
    EXPECT_NE(tuned.fingerprint, again.fingerprint);
}

TEST(Regressors, FingerprintSeesEveryValue) {
    const auto d = testing_support::factor_design(16, 20, 2, 0, 0.5);
    const auto base = training_fingerprint(d.x, d.y);
    std::vector<double> y = d.y.values();
    y[19] += 1e-12;
    EXPECT_NE(base, training_fingerprint(d.x, Series(d.y.start(), y)));
    Eigen::MatrixXd x = d.x.data();
    x(0, 1) = -x(0, 1);
    EXPECT_NE(base, training_fingerprint(Panel(d.x.start(), d.x.names(), x), d.y));
    EXPECT_EQ(base, training_fingerprint(d.x, d.y));
}

TEST(Regressors, BadFitDocument) {
    EXPECT_THROW(fit_from_json(nlohmann::json{{"format", "other"}}), std::invalid_argument);
}
