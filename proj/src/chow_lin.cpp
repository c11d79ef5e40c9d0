#include "disagg/chow_lin.hpp"

#include "disagg/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace disagg::chow_lin {

namespace {

double ipow(double base, long e) {
    double r = 1.0;
    for (long i = 0; i < e; ++i) r *= base;
    return r;
}

}  // namespace

Eigen::MatrixXd quarterly_covariance(double rho, long quarters) {
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("AR(1) parameter must satisfy |rho| < 1");
    const double scale = 1.0 / (1.0 - rho * rho);
    const double block = (1.0 + rho + rho * rho) * (1.0 + rho + rho * rho);
    Eigen::MatrixXd omega(quarters, quarters);
    // Sum over months s,t in quarters a,b of rho^|i-j|: diagonal 3 + 4rho + 2rho^2,
    // otherwise rho^(3d-2) (1 + rho + rho^2)^2 for d = |a - b| >= 1.
    std::vector<double> off(static_cast<std::size_t>(quarters), 0.0);
    off[0] = 3.0 + 4.0 * rho + 2.0 * rho * rho;
    if (quarters > 1) {
        double p = rho;  // rho^(3d-2) at d = 1
        for (long d = 1; d < quarters; ++d) {
            off[static_cast<std::size_t>(d)] = p * block;
            p *= rho * rho * rho;
        }
    }
    for (long a = 0; a < quarters; ++a) {
        for (long b = 0; b < quarters; ++b) omega(a, b) = scale * off[static_cast<std::size_t>(std::abs(a - b))];
    }
    return omega;
}

Eigen::MatrixXd monthly_quarterly_covariance(double rho, long quarters) {
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("AR(1) parameter must satisfy |rho| < 1");
    const double scale = 1.0 / (1.0 - rho * rho);
    const long months = 3 * quarters;
    Eigen::MatrixXd out(months, quarters);
    for (long i = 0; i < months; ++i) {
        for (long a = 0; a < quarters; ++a) {
            double s = 0.0;
            for (long t = 3 * a; t < 3 * a + 3; ++t) s += ipow(rho, std::abs(i - t));
            out(i, a) = scale * s;
        }
    }
    return out;
}

GlsFit gls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double rho) {
    const long q = design.rows();
    if (y.size() != q) throw std::invalid_argument("design and target length differ");
    if (design.cols() >= q) throw std::invalid_argument("Chow-Lin needs more quarters than regressors");
    Eigen::LLT<Eigen::MatrixXd> llt(quarterly_covariance(rho, q));
    if (llt.info() != Eigen::Success) throw NumericalError("quarterly covariance not positive definite");
    Eigen::MatrixXd xw = llt.matrixL().solve(design);
    Eigen::VectorXd yw = llt.matrixL().solve(y);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols()) throw NumericalError("rank deficient");

    GlsFit out;
    out.coef = qr.solve(yw);
    const double rss = (yw - xw * out.coef).squaredNorm();
    const double qd = static_cast<double>(q);
    out.sigma2 = rss / qd;
    double logdet = 0.0;
    const auto& l = llt.matrixLLT();
    for (long i = 0; i < q; ++i) logdet += 2.0 * std::log(l(i, i));
    out.loglik = -0.5 * qd * (std::log(2.0 * std::numbers::pi) + 1.0 + std::log(out.sigma2)) - 0.5 * logdet;
    return out;
}

double profile_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double rho) {
    return gls(design, y, rho).loglik;
}

ChowLinState estimate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const ChowLinOptions& opts,
                      double intercept_scale) {
    if (!(opts.rho_bound > 0.0 && opts.rho_bound < 1.0)) throw std::invalid_argument("rho_bound must lie in (0, 1)");
    if (opts.grid_points < 3) throw std::invalid_argument("Chow-Lin grid needs at least 3 points");
    const long off = opts.intercept ? 1 : 0;
    Eigen::MatrixXd design(x.rows(), x.cols() + off);
    if (opts.intercept) design.col(0).setConstant(intercept_scale);
    design.rightCols(x.cols()) = x;

    // Rank check once up front so that the failure is reported before the search.
    (void)gls(design, y, 0.0);

    const double bound = opts.rho_bound;
    const int n_grid = opts.grid_points;
    std::vector<double> grid(static_cast<std::size_t>(n_grid));
    int best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_grid; ++i) {
        grid[static_cast<std::size_t>(i)] = -bound + 2.0 * bound * i / (n_grid - 1);
        const double ll = profile_loglik(design, y, grid[static_cast<std::size_t>(i)]);
        if (ll > best_ll) {
            best_ll = ll;
            best = i;
        }
    }
    const double lo = grid[static_cast<std::size_t>(std::max(best - 1, 0))];
    const double hi = grid[static_cast<std::size_t>(std::min(best + 1, n_grid - 1))];
    auto neg = [&](double r) { return -profile_loglik(design, y, r); };
    auto [rho_b, neg_ll] = boost::math::tools::brent_find_minima(neg, lo, hi, 40);
    double rho = grid[static_cast<std::size_t>(best)];
    if (-neg_ll > best_ll) rho = rho_b;

    GlsFit fit = gls(design, y, rho);
    ChowLinState st;
    st.has_intercept = opts.intercept;
    st.intercept = opts.intercept ? fit.coef(0) : 0.0;
    st.beta = fit.coef.tail(x.cols());
    st.rho = rho;
    st.sigma2 = fit.sigma2;
    st.loglik = fit.loglik;
    st.at_boundary = std::abs(rho) >= bound - 1e-3;
    return st;
}

Eigen::VectorXd distribute(const Eigen::VectorXd& monthly_fit, const Eigen::VectorXd& y_quarterly, double rho) {
    const long q = y_quarterly.size();
    if (monthly_fit.size() != 3 * q) throw std::invalid_argument("monthly and quarterly lengths are misaligned");
    Eigen::VectorXd agg(q);
    for (long a = 0; a < q; ++a) agg(a) = monthly_fit.segment(3 * a, 3).sum();
    Eigen::VectorXd resid = y_quarterly - agg;
    Eigen::LLT<Eigen::MatrixXd> llt(quarterly_covariance(rho, q));
    if (llt.info() != Eigen::Success) throw NumericalError("quarterly covariance not positive definite");
    return monthly_fit + monthly_quarterly_covariance(rho, q) * llt.solve(resid);
}

}  // namespace disagg::chow_lin
