#include "disagg/explain.hpp"

#include "disagg/parallel.hpp"
#include "disagg/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace disagg {

namespace {

// Keeps each predict call at a bounded number of rows.
constexpr long kBatchRows = 1 << 15;

using Mask = std::vector<std::uint64_t>;

Mask empty_mask(long k) { return Mask(static_cast<std::size_t>((k + 63) / 64), 0); }
void set_bit(Mask& m, long j) { m[static_cast<std::size_t>(j / 64)] |= 1ULL << (j % 64); }
bool has_bit(const Mask& m, long j) { return (m[static_cast<std::size_t>(j / 64)] >> (j % 64)) & 1ULL; }

/// Value function for one observation over a list of coalitions.
class Game {
public:
    Game(const BatchModel& f, const Eigen::RowVectorXd& x, const Eigen::MatrixXd& bg) : f_(f), x_(x), bg_(bg) {}

    std::vector<double> values(const std::vector<Mask>& masks) const {
        const long b = bg_.rows();
        const long k = bg_.cols();
        std::vector<double> out(masks.size());
        const long per_batch = std::max<long>(1, kBatchRows / b);
        for (std::size_t start = 0; start < masks.size(); start += static_cast<std::size_t>(per_batch)) {
            const std::size_t stop = std::min(masks.size(), start + static_cast<std::size_t>(per_batch));
            Eigen::MatrixXd z(static_cast<long>(stop - start) * b, k);
            for (std::size_t s = start; s < stop; ++s) {
                auto block = z.middleRows(static_cast<long>(s - start) * b, b);
                block = bg_;
                for (long j = 0; j < k; ++j) {
                    if (has_bit(masks[s], j)) block.col(j).setConstant(x_(j));
                }
            }
            const Eigen::VectorXd p = f_(z);
            for (std::size_t s = start; s < stop; ++s) {
                out[s] = p.segment(static_cast<long>(s - start) * b, b).mean();
            }
        }
        return out;
    }

private:
    const BatchModel& f_;
    Eigen::RowVectorXd x_;
    const Eigen::MatrixXd& bg_;
};

Eigen::RowVectorXd exact_row(const Game& game, long k) {
    const std::size_t n_masks = std::size_t{1} << k;
    std::vector<Mask> masks(n_masks, empty_mask(k));
    for (std::size_t s = 0; s < n_masks; ++s) masks[s][0] = s;
    const std::vector<double> v = game.values(masks);
    // w(s) = s!(k-s-1)!/k! = 1 / (k * C(k-1, s))
    std::vector<double> w(static_cast<std::size_t>(k));
    double binom = 1.0;
    for (long s = 0; s < k; ++s) {
        w[static_cast<std::size_t>(s)] = 1.0 / (static_cast<double>(k) * binom);
        binom = binom * static_cast<double>(k - 1 - s) / static_cast<double>(s + 1);
    }
    Eigen::RowVectorXd phi = Eigen::RowVectorXd::Zero(k);
    for (long j = 0; j < k; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        double acc = 0.0;
        for (std::size_t s = 0; s < n_masks; ++s) {
            if (s & bit) continue;
            acc += w[static_cast<std::size_t>(__builtin_popcountll(s))] * (v[s | bit] - v[s]);
        }
        phi(j) = acc;
    }
    return phi;
}

Eigen::RowVectorXd sampled_row(const Game& game, long k, int permutations, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<Mask, double> cache;
    std::vector<long> order(static_cast<std::size_t>(k));
    Eigen::RowVectorXd phi = Eigen::RowVectorXd::Zero(k);
    std::vector<std::vector<Mask>> chains;
    std::vector<std::vector<long>> orders;
    for (int p = 0; p < permutations; ++p) {
        std::iota(order.begin(), order.end(), 0);
        for (long i = k - 1; i > 0; --i) {
            std::swap(order[static_cast<std::size_t>(i)],
                      order[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
        }
        std::vector<Mask> chain{empty_mask(k)};
        for (long j : order) {
            Mask next = chain.back();
            set_bit(next, j);
            chain.push_back(std::move(next));
        }
        chains.push_back(std::move(chain));
        orders.push_back(order);
    }
    std::vector<Mask> todo;
    for (const auto& chain : chains) {
        for (const auto& m : chain) {
            if (cache.emplace(m, 0.0).second) todo.push_back(m);
        }
    }
    const std::vector<double> v = game.values(todo);
    for (std::size_t i = 0; i < todo.size(); ++i) cache[todo[i]] = v[i];
    for (std::size_t p = 0; p < chains.size(); ++p) {
        for (long pos = 0; pos < k; ++pos) {
            const long j = orders[p][static_cast<std::size_t>(pos)];
            phi(j) += cache.at(chains[p][static_cast<std::size_t>(pos + 1)]) - cache.at(chains[p][static_cast<std::size_t>(pos)]);
        }
    }
    return phi / static_cast<double>(permutations);
}

}  // namespace

Panel thin_background(const Panel& background, std::size_t cap) {
    const std::size_t n = background.rows();
    if (cap == 0 || n <= cap) return background;
    Eigen::MatrixXd d(static_cast<long>(cap), static_cast<long>(background.cols()));
    for (std::size_t i = 0; i < cap; ++i) d.row(static_cast<long>(i)) = background.data().row(static_cast<long>(i * n / cap));
    // Thinned rows no longer form a contiguous index; keep the first period as the anchor.
    return Panel(background.start(), background.names(), std::move(d));
}

Attribution shapley_attributions(const BatchModel& f, const Panel& x, const Panel& background,
                                 const ShapleyOptions& opts) {
    if (background.rows() == 0) throw std::invalid_argument("background must be non-empty");
    if (x.names() != background.names()) throw std::invalid_argument("background columns differ from the observations");
    const long k = static_cast<long>(x.cols());
    if (k < 1) throw std::invalid_argument("attributions need at least one feature");
    if (opts.mode == ShapleyMode::Exact && k > kMaxExactFeatures) {
        throw std::invalid_argument("exact Shapley mode supports at most " + std::to_string(kMaxExactFeatures) +
                                    " features; use sampled mode");
    }
    if (opts.mode == ShapleyMode::Sampled && opts.permutations < 1) {
        throw std::invalid_argument("sampled mode needs at least one permutation");
    }
    const Eigen::MatrixXd bg = thin_background(background, opts.max_background).data();

    Attribution a;
    a.features = x.names();
    for (std::size_t i = 0; i < x.rows(); ++i) a.observations.push_back(x.period(i));
    a.base = f(bg).mean();
    a.prediction = f(x.data());
    a.phi.resize(static_cast<long>(x.rows()), k);
    parallel_for(
        x.rows(),
        [&](std::size_t i) {
            const Game game(f, x.data().row(static_cast<long>(i)), bg);
            a.phi.row(static_cast<long>(i)) = opts.mode == ShapleyMode::Exact
                                                  ? exact_row(game, k)
                                                  : sampled_row(game, k, opts.permutations, mix_seed(opts.seed, i));
        },
        opts.workers);
    return a;
}

Attribution shapley_attributions(const FitResult& fit, const Panel& x, const Panel& background,
                                 const ShapleyOptions& opts) {
    if (x.names() != fit.columns) throw std::invalid_argument("observation columns differ from the fit's columns");
    const BatchModel f = [&fit](const Eigen::MatrixXd& rows) { return predict_rows(fit, rows); };
    return shapley_attributions(f, x, background, opts);
}

std::vector<FeatureImportance> importance_ranking(const Attribution& a, std::size_t top) {
    std::vector<FeatureImportance> out;
    for (long j = 0; j < a.phi.cols(); ++j) {
        out.push_back({a.features[static_cast<std::size_t>(j)], a.phi.col(j).cwiseAbs().mean()});
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureImportance& l, const FeatureImportance& r) {
        if (l.mean_abs_phi != r.mean_abs_phi) return l.mean_abs_phi > r.mean_abs_phi;
        return l.feature < r.feature;
    });
    if (out.size() > top) out.resize(top);
    return out;
}

}  // namespace disagg
