#include "disagg/gradient_boost.hpp"

#include "disagg/elastic_net.hpp"
#include "disagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace disagg {

namespace gbt {

namespace {

using SortedIndex = std::vector<std::vector<int>>;

SortedIndex presort(const Eigen::MatrixXd& x) {
    SortedIndex out(static_cast<std::size_t>(x.cols()));
    for (long f = 0; f < x.cols(); ++f) {
        auto& idx = out[static_cast<std::size_t>(f)];
        idx.resize(static_cast<std::size_t>(x.rows()));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
    }
    return out;
}

struct Candidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Level-wise exact greedy growth. `node_of[r]` is the open node holding row r (-1 if the row
// is outside the subsample or in a closed leaf).
RegressionTree grow(const Eigen::MatrixXd& x, const SortedIndex& sorted, const std::vector<double>& grad,
                    std::vector<int> node_of, const BoostParams& p) {
    RegressionTree tree;
    std::vector<double> g_sum{0.0};
    std::vector<double> h_sum{0.0};
    for (std::size_t r = 0; r < node_of.size(); ++r) {
        if (node_of[r] == 0) {
            g_sum[0] += grad[r];
            h_sum[0] += 1.0;
        }
    }
    tree.nodes.push_back({});
    std::vector<int> frontier{0};
    auto score = [&](double g, double h) { return g * g / (h + p.leaf_l2); };

    for (int depth = 0; depth < p.max_depth && !frontier.empty(); ++depth) {
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < frontier.size(); ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
        std::vector<Candidate> best(frontier.size());
        std::vector<double> gl(frontier.size()), hl(frontier.size()), last(frontier.size());
        std::vector<char> seen(frontier.size());
        for (long f = 0; f < x.cols(); ++f) {
            std::fill(gl.begin(), gl.end(), 0.0);
            std::fill(hl.begin(), hl.end(), 0.0);
            std::fill(seen.begin(), seen.end(), 0);
            for (int r : sorted[static_cast<std::size_t>(f)]) {
                const int nd = node_of[static_cast<std::size_t>(r)];
                if (nd < 0) continue;
                const int s = slot[static_cast<std::size_t>(nd)];
                if (s < 0) continue;
                const auto su = static_cast<std::size_t>(s);
                const double v = x(r, f);
                if (seen[su] && v > last[su]) {
                    const double g = g_sum[static_cast<std::size_t>(nd)];
                    const double h = h_sum[static_cast<std::size_t>(nd)];
                    const double hr = h - hl[su];
                    if (hl[su] >= p.min_child_weight && hr >= p.min_child_weight) {
                        const double gain =
                            0.5 * (score(gl[su], hl[su]) + score(g - gl[su], hr) - score(g, h)) - p.gamma;
                        if (gain > best[su].gain) best[su] = {gain, static_cast<int>(f), 0.5 * (last[su] + v)};
                    }
                }
                gl[su] += grad[static_cast<std::size_t>(r)];
                hl[su] += 1.0;
                last[su] = v;
                seen[su] = 1;
            }
        }
        std::vector<int> next;
        for (std::size_t s = 0; s < frontier.size(); ++s) {
            if (best[s].feature < 0) continue;
            const int id = frontier[s];
            const int left = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            g_sum.push_back(0.0);
            g_sum.push_back(0.0);
            h_sum.push_back(0.0);
            h_sum.push_back(0.0);
            auto& nd = tree.nodes[static_cast<std::size_t>(id)];
            nd.feature = best[s].feature;
            nd.threshold = best[s].threshold;
            nd.left = left;
            nd.right = left + 1;
            next.push_back(left);
            next.push_back(left + 1);
        }
        for (std::size_t r = 0; r < node_of.size(); ++r) {
            const int nd = node_of[r];
            if (nd < 0) continue;
            const auto& node = tree.nodes[static_cast<std::size_t>(nd)];
            if (node.feature < 0) continue;
            const int child = x(static_cast<long>(r), node.feature) < node.threshold ? node.left : node.right;
            node_of[r] = child;
            g_sum[static_cast<std::size_t>(child)] += grad[r];
            h_sum[static_cast<std::size_t>(child)] += 1.0;
        }
        frontier = std::move(next);
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (tree.nodes[i].feature < 0) tree.nodes[i].value = -p.learning_rate * g_sum[i] / (h_sum[i] + p.leaf_l2);
    }
    return tree;
}

void validate(const BoostParams& p) {
    if (p.max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
    if (p.trees < 0) throw std::invalid_argument("tree count must be non-negative");
    if (!(p.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(p.subsample > 0.0 && p.subsample <= 1.0)) throw std::invalid_argument("subsample must lie in (0, 1]");
    if (p.leaf_l2 < 0.0 || p.min_child_weight < 0.0) throw std::invalid_argument("negative tree penalty");
}

// Trains on (x, y) and calls `each(t, tree)` after every tree.
template <class Fn>
BoostState train_with(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const BoostParams& p, std::uint64_t seed,
                      Fn&& each) {
    validate(p);
    const long n = x.rows();
    if (n < 1 || y.size() != n) throw std::invalid_argument("boosting needs aligned, non-empty data");
    BoostState st;
    st.params = p;
    st.base_score = y.mean();
    const SortedIndex sorted = presort(x);
    std::vector<double> pred(static_cast<std::size_t>(n), st.base_score);
    std::vector<double> grad(static_cast<std::size_t>(n));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    const auto n_sub = std::max<long>(1, std::lround(p.subsample * static_cast<double>(n)));
    for (int t = 0; t < p.trees; ++t) {
        for (long i = 0; i < n; ++i) grad[static_cast<std::size_t>(i)] = pred[static_cast<std::size_t>(i)] - y(i);
        std::vector<int> node_of(static_cast<std::size_t>(n), 0);
        if (n_sub < n) {
            std::shuffle(order.begin(), order.end(), rng);
            std::fill(node_of.begin(), node_of.end(), -1);
            for (long i = 0; i < n_sub; ++i) node_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
        }
        RegressionTree tree = grow(x, sorted, grad, std::move(node_of), p);
        for (long i = 0; i < n; ++i) pred[static_cast<std::size_t>(i)] += tree.predict(x.row(i));
        each(t, tree);
        st.trees.push_back(std::move(tree));
    }
    return st;
}

}  // namespace

BoostState train(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const BoostParams& params, std::uint64_t seed) {
    return train_with(x, y, params, seed, [](int, const RegressionTree&) {});
}

Eigen::VectorXd predict(const BoostState& model, const Eigen::MatrixXd& x) {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), model.base_score);
    for (const auto& tree : model.trees) {
        for (long i = 0; i < x.rows(); ++i) out(i) += tree.predict(x.row(i));
    }
    return out;
}

BoostState fit_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const BoostGrid& grid, std::uint64_t seed) {
    const long n = x.rows();
    if (grid.size() == 0) throw std::invalid_argument("empty boosting grid");
    const auto bounds = enet::fold_bounds(n, grid.folds);
    std::vector<int> tree_axis = grid.trees;
    const int max_trees = *std::max_element(tree_axis.begin(), tree_axis.end());

    // Grid order: depth, learning rate, trees, subsample, leaf_l2, min_child_weight.
    const std::size_t n_lr = grid.learning_rate.size(), n_tr = tree_axis.size(), n_ss = grid.subsample.size(),
                      n_l2 = grid.leaf_l2.size(), n_mc = grid.min_child_weight.size();
    auto grid_index = [&](std::size_t d, std::size_t l, std::size_t t, std::size_t s, std::size_t r, std::size_t m) {
        return ((((d * n_lr + l) * n_tr + t) * n_ss + s) * n_l2 + r) * n_mc + m;
    };
    std::vector<double> cv(grid.size(), 0.0);
    std::vector<BoostParams> params(grid.size());

    std::size_t combo = 0;
    for (std::size_t d = 0; d < grid.max_depth.size(); ++d)
        for (std::size_t l = 0; l < n_lr; ++l)
            for (std::size_t s = 0; s < n_ss; ++s)
                for (std::size_t r = 0; r < n_l2; ++r)
                    for (std::size_t m = 0; m < n_mc; ++m, ++combo) {
                        BoostParams p{grid.max_depth[d], grid.learning_rate[l], max_trees, grid.subsample[s],
                                      grid.leaf_l2[r], grid.min_child_weight[m]};
                        for (std::size_t t = 0; t < n_tr; ++t) {
                            auto& slot = params[grid_index(d, l, t, s, r, m)];
                            slot = p;
                            slot.trees = tree_axis[t];
                        }
                        for (int f = 0; f < grid.folds; ++f) {
                            const long v0 = bounds[static_cast<std::size_t>(f)];
                            const long v1 = bounds[static_cast<std::size_t>(f) + 1];
                            const long n_val = v1 - v0;
                            Eigen::MatrixXd xt(n - n_val, x.cols());
                            Eigen::VectorXd yt(n - n_val);
                            xt << x.topRows(v0), x.bottomRows(n - v1);
                            yt << y.head(v0), y.tail(n - v1);
                            const Eigen::MatrixXd xv = x.middleRows(v0, n_val);
                            const Eigen::VectorXd yv = y.segment(v0, n_val);
                            Eigen::VectorXd pv = Eigen::VectorXd::Constant(n_val, yt.mean());
                            train_with(xt, yt, p, mix_seed(seed, combo, static_cast<std::uint64_t>(f)),
                                       [&](int ti, const RegressionTree& tree) {
                                           for (long i = 0; i < n_val; ++i) pv(i) += tree.predict(xv.row(i));
                                           for (std::size_t t = 0; t < n_tr; ++t) {
                                               if (tree_axis[t] == ti + 1) {
                                                   cv[grid_index(d, l, t, s, r, m)] +=
                                                       (yv - pv).squaredNorm() / static_cast<double>(n_val) /
                                                       grid.folds;
                                               }
                                           }
                                       });
                        }
                    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < cv.size(); ++i) {
        if (cv[i] < cv[best] || (cv[i] == cv[best] && params[i].trees < params[best].trees)) best = i;
    }
    BoostState st = train(x, y, params[best], seed);
    st.cv_mse = cv[best];
    return st;
}

}  // namespace gbt

}  // namespace disagg
