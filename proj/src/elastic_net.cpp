#include "disagg/elastic_net.hpp"

#include "disagg/errors.hpp"
#include "disagg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace disagg::enet {

double objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& b, double l1, double l2) {
    return (y - x * b).squaredNorm() + l1 * b.lpNorm<1>() + l2 * b.squaredNorm();
}

double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

CdResult coordinate_descent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1, double l2,
                            const Eigen::VectorXd& init, int max_sweeps, double tol, std::vector<double>* trace) {
    const long k = x.cols();
    Eigen::VectorXd col_sq = x.colwise().squaredNorm().transpose();
    Eigen::VectorXd b = init.size() == k ? init : Eigen::VectorXd::Zero(k);
    for (long j = 0; j < k; ++j) {
        if (col_sq(j) == 0.0) b(j) = 0.0;
    }
    Eigen::VectorXd r = y - x * b;
    const double y_norm = std::max(y.norm(), 1e-300);

    CdResult out;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (long j = 0; j < k; ++j) {
            if (col_sq(j) == 0.0) continue;
            const double old = b(j);
            const double z = x.col(j).dot(r) + col_sq(j) * old;
            const double next = soft_threshold(z, 0.5 * l1) / (col_sq(j) + l2);
            if (next != old) {
                r.noalias() -= (next - old) * x.col(j);
                b(j) = next;
                max_change = std::max(max_change, std::abs(next - old) * std::sqrt(col_sq(j)));
            }
        }
        if (trace) trace->push_back(objective(x, y, b, l1, l2));
        out.sweeps = sweep;
        out.max_change = max_change / y_norm;
        if (max_change <= tol * y_norm) {
            out.coef = std::move(b);
            return out;
        }
    }
    throw NumericalError("elastic net did not converge after " + std::to_string(max_sweeps) +
                         " sweeps (relative coefficient change " + std::to_string(out.max_change) + ")");
}

Scaling scaling_of(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Scaling s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().mean();
    s.scale = ((x.rowwise() - s.mean).colwise().squaredNorm() / n).cwiseSqrt();
    s.y_mean = y.mean();
    return s;
}

namespace {

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Scaling& s) {
    Eigen::MatrixXd out = x.rowwise() - s.mean;
    for (long j = 0; j < x.cols(); ++j) {
        if (s.scale(j) > 0.0) out.col(j) /= s.scale(j);
        else out.col(j).setZero();
    }
    return out;
}

ElasticNetState to_original_scale(const Eigen::VectorXd& b, const Scaling& s) {
    ElasticNetState st;
    st.beta = Eigen::VectorXd::Zero(b.size());
    for (long j = 0; j < b.size(); ++j) {
        if (s.scale(j) > 0.0) st.beta(j) = b(j) / s.scale(j);
    }
    st.intercept = s.y_mean - s.mean.dot(st.beta);
    return st;
}

bool constant(const Eigen::VectorXd& y) { return y.size() == 0 || (y.array() == y(0)).all(); }

}  // namespace

double alpha_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l1_ratio) {
    if (!(l1_ratio > 0.0)) throw std::invalid_argument("alpha_max needs l1_ratio > 0");
    return 2.0 * (x.transpose() * y).cwiseAbs().maxCoeff() / l1_ratio;
}

std::vector<double> alpha_path(double amax, int n, double min_ratio) {
    if (n < 1) throw std::invalid_argument("alpha path needs at least one value");
    if (!(amax > 0.0)) amax = 1e-12;
    std::vector<double> out(static_cast<std::size_t>(n));
    const double lo = std::log10(amax * min_ratio);
    const double hi = std::log10(amax);
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = n == 1 ? amax : std::pow(10.0, hi - (hi - lo) * i / (n - 1));
    }
    return out;
}

std::vector<long> fold_bounds(long n, int folds) {
    if (folds < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
    if (n < folds) throw std::invalid_argument("fewer rows than folds");
    std::vector<long> bounds{0};
    const long base = n / folds;
    const long extra = n % folds;
    for (int f = 0; f < folds; ++f) bounds.push_back(bounds.back() + base + (f < extra ? 1 : 0));
    return bounds;
}

ElasticNetState fit_fixed(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElasticNetParams& params,
                          const ElasticNetOptions& opts) {
    if (x.rows() != y.size()) throw std::invalid_argument("design and target length differ");
    if (x.rows() < 2) throw std::invalid_argument("elastic net needs at least two rows");
    if (constant(y)) throw std::invalid_argument("target has zero variance");
    const Scaling s = scaling_of(x, y);
    const Eigen::MatrixXd xs = standardize(x, s);
    const Eigen::VectorXd yc = y.array() - s.y_mean;
    const double l1 = params.alpha * params.l1_ratio;
    const double l2 = params.alpha * (1.0 - params.l1_ratio);
    auto cd = coordinate_descent(xs, yc, l1, l2, Eigen::VectorXd::Zero(x.cols()), opts.max_sweeps, opts.tol);
    ElasticNetState st = to_original_scale(cd.coef, s);
    st.params = params;
    st.sweeps = cd.sweeps;
    return st;
}

ElasticNetState fit_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElasticNetOptions& opts) {
    if (x.rows() != y.size()) throw std::invalid_argument("design and target length differ");
    if (constant(y)) throw std::invalid_argument("target has zero variance");
    if (opts.l1_ratios.empty()) throw std::invalid_argument("empty l1_ratio grid");
    const long n = x.rows();
    const auto bounds = fold_bounds(n, opts.folds);
    const Scaling full = scaling_of(x, y);
    const Eigen::MatrixXd xs_full = standardize(x, full);
    const Eigen::VectorXd yc_full = y.array() - full.y_mean;

    ElasticNetParams best{};
    double best_mse = std::numeric_limits<double>::infinity();
    for (double ratio : opts.l1_ratios) {
        if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("l1_ratio must lie in (0, 1]");
        const auto alphas = alpha_path(alpha_max(xs_full, yc_full, ratio), opts.n_alphas, opts.alpha_min_ratio);
        std::vector<double> mse(alphas.size(), 0.0);
        for (int f = 0; f < opts.folds; ++f) {
            const long v0 = bounds[static_cast<std::size_t>(f)];
            const long v1 = bounds[static_cast<std::size_t>(f) + 1];
            const long n_val = v1 - v0;
            Eigen::MatrixXd xt(n - n_val, x.cols());
            Eigen::VectorXd yt(n - n_val);
            xt << x.topRows(v0), x.bottomRows(n - v1);
            yt << y.head(v0), y.tail(n - v1);
            const Scaling s = scaling_of(xt, yt);
            const Eigen::MatrixXd xts = standardize(xt, s);
            const Eigen::VectorXd ytc = yt.array() - s.y_mean;
            const Eigen::MatrixXd xvs = standardize(x.middleRows(v0, n_val), s);
            const Eigen::VectorXd yv = y.segment(v0, n_val);
            Eigen::VectorXd warm = Eigen::VectorXd::Zero(x.cols());
            for (std::size_t a = 0; a < alphas.size(); ++a) {
                const double l1 = alphas[a] * ratio;
                const double l2 = alphas[a] * (1.0 - ratio);
                warm = coordinate_descent(xts, ytc, l1, l2, warm, opts.max_sweeps, opts.cv_tol).coef;
                const Eigen::VectorXd pred = (xvs * warm).array() + s.y_mean;
                mse[a] += (yv - pred).squaredNorm() / static_cast<double>(n_val) / opts.folds;
            }
        }
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            if (mse[a] < best_mse || (mse[a] == best_mse && alphas[a] > best.alpha)) {
                best_mse = mse[a];
                best = {alphas[a], ratio};
            }
        }
    }
    ElasticNetState st = fit_fixed(x, y, best, opts);
    st.cv_mse = best_mse;
    return st;
}

BootstrapSummary bootstrap(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ElasticNetParams& params,
                           const ElasticNetOptions& opts, const BootstrapOptions& bopts) {
    if (bopts.replications < 1) throw std::invalid_argument("bootstrap needs at least one replication");
    if (!(bopts.coverage > 0.0 && bopts.coverage < 1.0)) throw std::invalid_argument("coverage must lie in (0, 1)");
    const long n = x.rows();
    const long k = x.cols();
    std::mt19937_64 rng(bopts.seed);
    std::uniform_int_distribution<long> pick(0, n - 1);
    std::vector<Eigen::VectorXd> draws;
    draws.reserve(static_cast<std::size_t>(bopts.replications));
    BootstrapSummary out;
    Eigen::MatrixXd xb(n, k);
    Eigen::VectorXd yb(n);
    for (int b = 0; b < bopts.replications; ++b) {
        for (long i = 0; i < n; ++i) {
            const long src = bopts.identity_resample ? i : pick(rng);
            xb.row(i) = x.row(src);
            yb(i) = y(src);
        }
        if (constant(yb)) {
            ++out.skipped;
            continue;
        }
        ElasticNetState st = fit_fixed(xb, yb, params, opts);
        Eigen::VectorXd v(k + 1);
        v << st.intercept, st.beta;
        draws.push_back(std::move(v));
    }
    out.used = static_cast<int>(draws.size());
    if (draws.empty()) throw NumericalError("every bootstrap replication was degenerate");
    out.mean = Eigen::VectorXd::Zero(k + 1);
    for (const auto& d : draws) out.mean += d;
    out.mean /= static_cast<double>(draws.size());
    out.lower.resize(k + 1);
    out.upper.resize(k + 1);
    std::vector<double> col(draws.size());
    const double tail = 0.5 * (1.0 - bopts.coverage);
    for (long j = 0; j <= k; ++j) {
        for (std::size_t b = 0; b < draws.size(); ++b) col[b] = draws[b](j);
        std::sort(col.begin(), col.end());
        out.lower(j) = stats::quantile_sorted(col, tail);
        out.upper(j) = stats::quantile_sorted(col, 1.0 - tail);
    }
    return out;
}

}  // namespace disagg::enet
