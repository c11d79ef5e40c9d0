#include "disagg/theorylab.hpp"

#include "disagg/log.hpp"
#include "disagg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace disagg::theory {

namespace {

Eigen::VectorXd or_zero(const Eigen::VectorXd& v, long p) {
    if (v.size() == 0) return Eigen::VectorXd::Zero(p);
    if (v.size() != p) throw std::invalid_argument("regime mean has the wrong dimension");
    return v;
}

}  // namespace

RegimeBiasResult simulate_regime_bias(const RegimeDgpSpec& spec) {
    const long p = spec.beta1.size();
    if (p < 1 || spec.beta2.size() != p) throw std::invalid_argument("beta1 and beta2 must share a positive dimension");
    if (!(spec.pi >= 0.0 && spec.pi <= 1.0)) throw std::invalid_argument("pi must lie in [0, 1]");
    if (!(spec.sigma_eps >= 0.0) || !(spec.x_sd >= 0.0)) throw std::invalid_argument("scales must be non-negative");
    if (spec.n < 100) throw std::invalid_argument("regime simulation needs n >= 100");
    const Eigen::VectorXd mu0 = or_zero(spec.mean_normal, p);
    const Eigen::VectorXd mu1 = or_zero(spec.mean_crisis, p);

    RegimeBiasResult r;
    r.beta_bar = (1.0 - spec.pi) * spec.beta1 + spec.pi * spec.beta2;
    r.crisis_bias_formula = (1.0 - spec.pi) * (spec.beta2 - spec.beta1).dot(mu1);
    const double v = spec.x_sd * spec.x_sd;
    const Eigen::MatrixXd s0 = v * Eigen::MatrixXd::Identity(p, p) + mu0 * mu0.transpose();
    const Eigen::MatrixXd s1 = v * Eigen::MatrixXd::Identity(p, p) + mu1 * mu1.transpose();
    const Eigen::MatrixXd sxx = (1.0 - spec.pi) * s0 + spec.pi * s1;
    r.beta_limit = sxx.ldlt().solve((1.0 - spec.pi) * s0 * spec.beta1 + spec.pi * s1 * spec.beta2);
    if (spec.pi * static_cast<double>(spec.n) < 5.0) {
        r.warnings.push_back("crisis regime underrepresented");
        log::warn("crisis regime underrepresented");
    }

    const long n = static_cast<long>(spec.n);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    std::vector<bool> crisis(spec.n);
    for (long i = 0; i < n; ++i) {
        const bool s = uniform01(rng) < spec.pi;
        crisis[static_cast<std::size_t>(i)] = s;
        const Eigen::VectorXd& mu = s ? mu1 : mu0;
        for (long j = 0; j < p; ++j) x(i, j) = mu(j) + spec.x_sd * gauss(rng);
        y(i) = x.row(i).dot(s ? spec.beta2 : spec.beta1) + spec.sigma_eps * gauss(rng);
    }
    const Eigen::MatrixXd xtx = x.transpose() * x;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    r.beta_ols = ldlt.solve(x.transpose() * y);
    const Eigen::VectorXd u = y - x * r.beta_ols;
    const Eigen::MatrixXd meat = x.transpose() * u.array().square().matrix().asDiagonal() * x;
    const Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    r.beta_se = (bread * meat * bread).diagonal().cwiseSqrt();

    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < n; ++i) {
        if (!crisis[static_cast<std::size_t>(i)]) continue;
        ++r.crisis_draws;
        sum += u(i);
        sumsq += u(i) * u(i);
    }
    if (r.crisis_draws == 0) {
        r.crisis_bias_empirical = std::numeric_limits<double>::quiet_NaN();
        r.crisis_bias_se = std::numeric_limits<double>::quiet_NaN();
    } else {
        const double c = static_cast<double>(r.crisis_draws);
        r.crisis_bias_empirical = sum / c;
        const double var = c > 1.0 ? (sumsq - c * r.crisis_bias_empirical * r.crisis_bias_empirical) / (c - 1.0) : 0.0;
        r.crisis_bias_se = std::sqrt(std::max(0.0, var) / c);
    }
    return r;
}

double ridge_mse(const Eigen::VectorXd& d, const Eigen::VectorXd& alpha, double sigma2, double lambda) {
    double s = 0.0;
    for (long j = 0; j < d.size(); ++j) {
        const double den = (d(j) + lambda) * (d(j) + lambda);
        s += (sigma2 * d(j) + lambda * lambda * alpha(j) * alpha(j)) / den;
    }
    return s;
}

RidgeCurveResult ridge_mse_curve(const RidgeCurveSpec& spec) {
    if (spec.d.size() == 0 || spec.alpha.size() != spec.d.size()) {
        throw std::invalid_argument("eigenvalues and rotated coefficients must share a positive dimension");
    }
    if ((spec.d.array() <= 0.0).any()) throw std::invalid_argument("eigenvalues d_j must be positive");
    if (!(spec.sigma2 >= 0.0)) throw std::invalid_argument("sigma^2 must be non-negative");
    bool has_zero = false;
    for (double l : spec.lambdas) {
        if (!(l >= 0.0)) throw std::invalid_argument("lambda grid must be non-negative");
        has_zero = has_zero || l == 0.0;
    }
    if (!has_zero) throw std::invalid_argument("lambda grid must include 0");

    RidgeCurveResult r;
    r.lambdas = spec.lambdas;
    std::sort(r.lambdas.begin(), r.lambdas.end());
    r.lambdas.erase(std::unique(r.lambdas.begin(), r.lambdas.end()), r.lambdas.end());
    for (double l : r.lambdas) r.mse.push_back(ridge_mse(spec.d, spec.alpha, spec.sigma2, l));
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.mse.size(); ++i) {
        if (r.mse[i] < r.mse[best]) best = i;
    }
    r.lambda_star = r.lambdas[best];
    r.mse_star = r.mse[best];
    if (r.lambdas.size() > 1) r.slope_at_zero = (r.mse[1] - r.mse[0]) / r.lambdas[1];
    r.analytic_slope_at_zero = -2.0 * spec.sigma2 * spec.d.array().inverse().square().sum();
    if (spec.mc_lambda) r.monte_carlo = ridge_monte_carlo(spec, *spec.mc_lambda);
    return r;
}

RidgeMonteCarlo ridge_monte_carlo(const RidgeCurveSpec& spec, double lambda) {
    const long p = spec.d.size();
    const long n = std::max(spec.mc_rows, p);
    if (spec.mc_reps < 2) throw std::invalid_argument("Monte Carlo needs at least 2 replications");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // Orthonormal columns Q from a random Gaussian matrix, then X = Q diag(sqrt d), V = I.
    Eigen::MatrixXd g(n, p);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p; ++j) g(i, j) = gauss(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd x = q * spec.d.cwiseSqrt().asDiagonal();
    const Eigen::VectorXd& beta = spec.alpha;
    const Eigen::MatrixXd a = x.transpose() * x + lambda * Eigen::MatrixXd::Identity(p, p);
    const Eigen::LDLT<Eigen::MatrixXd> solver(a);
    const double sigma = std::sqrt(spec.sigma2);

    double sum = 0.0, sumsq = 0.0;
    Eigen::VectorXd e(n);
    for (int rep = 0; rep < spec.mc_reps; ++rep) {
        for (long i = 0; i < n; ++i) e(i) = sigma * gauss(rng);
        const Eigen::VectorXd y = x * beta + e;
        const double loss = (solver.solve(x.transpose() * y) - beta).squaredNorm();
        sum += loss;
        sumsq += loss * loss;
    }
    RidgeMonteCarlo mc;
    mc.lambda = lambda;
    mc.reps = spec.mc_reps;
    const double r = static_cast<double>(spec.mc_reps);
    mc.mse = sum / r;
    mc.standard_error = std::sqrt(std::max(0.0, (sumsq - r * mc.mse * mc.mse) / (r - 1.0)) / r);
    return mc;
}

}  // namespace disagg::theory

namespace disagg::theory {

bool RegimeStudy::bias_matches_formula() const {
    return std::isfinite(crisis_bias_mean) && std::abs(crisis_bias_mean - crisis_bias_formula) <= 3.0 * crisis_bias_se;
}

RegimeStudy regime_bias_study(const RegimeDgpSpec& spec, int seeds) {
    if (seeds < 2) throw std::invalid_argument("regime study needs at least two seeds");
    RegimeStudy st;
    st.seeds = seeds;
    st.beta_ols.resize(seeds, spec.beta1.size());
    double sum = 0.0, sumsq = 0.0;
    int with_crisis = 0;
    for (int s = 0; s < seeds; ++s) {
        RegimeDgpSpec one = spec;
        one.seed = spec.seed + static_cast<std::uint64_t>(s);
        const RegimeBiasResult r = simulate_regime_bias(one);
        if (s == 0) {
            st.crisis_bias_formula = r.crisis_bias_formula;
            st.beta_bar = r.beta_bar;
            st.beta_limit = r.beta_limit;
        }
        st.beta_ols.row(s) = r.beta_ols.transpose();
        if (((r.beta_ols - r.beta_bar).array().abs() < 3.0 * r.beta_se.array()).all()) ++st.consistent;
        if (((r.beta_ols - r.beta_limit).array().abs() < 3.0 * r.beta_se.array()).all()) ++st.consistent_limit;
        if (std::isfinite(r.crisis_bias_empirical)) {
            ++with_crisis;
            sum += r.crisis_bias_empirical;
            sumsq += r.crisis_bias_empirical * r.crisis_bias_empirical;
        }
    }
    if (with_crisis < 2) {
        st.crisis_bias_mean = std::numeric_limits<double>::quiet_NaN();
        st.crisis_bias_se = std::numeric_limits<double>::quiet_NaN();
    } else {
        const double c = with_crisis;
        st.crisis_bias_mean = sum / c;
        st.crisis_bias_se = std::sqrt(std::max(0.0, (sumsq - c * st.crisis_bias_mean * st.crisis_bias_mean) / (c - 1.0)) / c);
    }
    return st;
}

}  // namespace disagg::theory
