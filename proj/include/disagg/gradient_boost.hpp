#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace disagg {

struct BoostParams {
    int max_depth = 3;
    double learning_rate = 0.1;
    int trees = 100;
    double subsample = 1.0;
    /// L2 penalty on leaf weights.
    double leaf_l2 = 1.0;
    /// Minimum hessian mass (row count under squared loss) per child.
    double min_child_weight = 1.0;
    /// Minimum gain required to split.
    double gamma = 0.0;
};

/// Axes of the cross-validated grid. The default is 3*4*3*3*2*2 = 432 combinations.
struct BoostGrid {
    std::vector<int> max_depth{2, 3, 4};
    std::vector<double> learning_rate{0.01, 0.05, 0.1, 0.3};
    std::vector<int> trees{100, 300, 500};
    std::vector<double> subsample{0.7, 0.85, 1.0};
    std::vector<double> leaf_l2{0.0, 1.0};
    std::vector<double> min_child_weight{1.0, 3.0};
    int folds = 5;

    std::size_t size() const {
        return max_depth.size() * learning_rate.size() * trees.size() * subsample.size() * leaf_l2.size() *
               min_child_weight.size();
    }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    template <class Row>
    double predict(const Row& x) const {
        int i = 0;
        while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(i)];
            i = x(nd.feature) < nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }
};

struct BoostState {
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
    BoostParams params;
    double cv_mse = 0.0;
};

namespace gbt {

/// Stagewise squared-loss boosting with second-order exact greedy splits.
BoostState train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const BoostParams& params, std::uint64_t seed);

Eigen::VectorXd predict(const BoostState& model, const Eigen::MatrixXd& x);

/// K-fold contiguous CV over the grid; refits the winner on all rows.
BoostState fit_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const BoostGrid& grid, std::uint64_t seed);

}  // namespace gbt

}  // namespace disagg
