#include "disagg/reconcile.hpp"

#include "disagg/errors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace disagg {

namespace {

void check_ends(long n_months, const std::vector<long>& ends) {
    for (std::size_t i = 0; i < ends.size(); ++i) {
        if (ends[i] < 1 || ends[i] > n_months) throw std::invalid_argument("quarter end outside the monthly range");
        if (i > 0 && ends[i] - ends[i - 1] != 3) throw std::invalid_argument("quarter ends must be spaced 3 months apart");
    }
}

ConstraintSystem skeleton(long n_months, const std::vector<long>& ends) {
    if (n_months < 5) throw std::invalid_argument("no constrainable quarter");
    check_ends(n_months, ends);
    ConstraintSystem sys;
    for (long e : ends) {
        if (e >= 5) sys.quarter_ends.push_back(e);
    }
    if (sys.quarter_ends.empty()) throw std::invalid_argument("no constrainable quarter");
    sys.m = Eigen::MatrixXd::Zero(static_cast<long>(sys.quarter_ends.size()), n_months);
    for (std::size_t r = 0; r < sys.quarter_ends.size(); ++r) {
        const long last = sys.quarter_ends[r] - 1;  // 0-based column of month m
        for (long w = 0; w < 5; ++w) sys.m(static_cast<long>(r), last - w) = kMa5Weights[w];
    }
    return sys;
}

Eigen::LLT<Eigen::MatrixXd> gram(const ConstraintSystem& system) {
    Eigen::MatrixXd g = system.m * system.m.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    const auto& l = llt.matrixLLT();
    bool ok = llt.info() == Eigen::Success;
    for (long i = 0; ok && i < g.rows(); ++i) ok = l(i, i) > 1e-10 * std::sqrt(g.diagonal().maxCoeff());
    if (!ok) throw NumericalError("degenerate constraints");
    return llt;
}

}  // namespace

ConstraintSystem build_constraint_matrix(long n_months, const std::vector<long>& quarter_ends) {
    return skeleton(n_months, quarter_ends);
}

ConstraintSystem make_constraint_system(Period first_month, long n_months, const Series& y_quarterly) {
    if (first_month.frequency() != Frequency::Monthly || y_quarterly.frequency() != Frequency::Quarterly) {
        throw std::invalid_argument("constraint system needs a monthly range and quarterly observations");
    }
    std::vector<long> ends;
    std::vector<Period> quarters;
    std::vector<double> z;
    for (std::size_t i = 0; i < y_quarterly.size(); ++i) {
        const Period q = y_quarterly.period(i);
        const long end = (q.quarter_end_month() - first_month) + 1;
        if (end < 5 || end > n_months || !std::isfinite(y_quarterly[i])) continue;
        if (!ends.empty() && end - ends.back() != 3) {
            throw std::invalid_argument("quarterly observations have a gap at " + q.to_string());
        }
        ends.push_back(end);
        quarters.push_back(q);
        z.push_back(y_quarterly[i]);
    }
    ConstraintSystem sys = skeleton(n_months, ends);
    sys.z = Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<long>(z.size()));
    sys.quarters = std::move(quarters);
    sys.first_month = first_month;
    return sys;
}

Eigen::VectorXd reconcile_min_norm(const Eigen::VectorXd& tilde_y, const ConstraintSystem& system) {
    if (tilde_y.size() != system.months()) throw std::invalid_argument("signal length does not match constraint system");
    if (system.z.size() != system.rows()) throw std::invalid_argument("constraint system has no targets");
    const auto llt = gram(system);
    const Eigen::VectorXd gap = system.z - system.m * tilde_y;
    return tilde_y + system.m.transpose() * llt.solve(gap);
}

Series reconcile_min_norm(const Series& tilde_y, const ConstraintSystem& system) {
    Eigen::VectorXd out = reconcile_min_norm(tilde_y.vector(), system);
    return Series(tilde_y.start(), std::vector<double>(out.data(), out.data() + out.size()), "reconciled");
}

Series denton_proportional(const Series& tilde_y, const Series& quarterly_totals) {
    if (tilde_y.frequency() != Frequency::Monthly || quarterly_totals.frequency() != Frequency::Quarterly) {
        throw std::invalid_argument("denton_proportional needs a monthly signal and quarterly totals");
    }
    std::vector<double> out = tilde_y.values();
    for (std::size_t i = 0; i < quarterly_totals.size(); ++i) {
        const Period q = quarterly_totals.period(i);
        const long first = tilde_y.index_of(q.quarter_end_month() - 2);
        const long last = tilde_y.index_of(q.quarter_end_month());
        if (first < 0 || last < 0 || !std::isfinite(quarterly_totals[i])) continue;
        double sum = 0.0;
        for (long m = first; m <= last; ++m) sum += tilde_y[static_cast<std::size_t>(m)];
        if (sum == 0.0) throw std::invalid_argument("proportional scaling undefined for " + q.to_string());
        const double k = quarterly_totals[i] / sum;
        for (long m = first; m <= last; ++m) out[static_cast<std::size_t>(m)] *= k;
    }
    return Series(tilde_y.start(), std::move(out), "denton");
}

Eigen::VectorXd adjustment_factors(const Eigen::VectorXd& tilde_y, const ConstraintSystem& system) {
    const Eigen::VectorXd agg = system.m * tilde_y;
    Eigen::VectorXd k(agg.size());
    for (long i = 0; i < agg.size(); ++i) {
        k(i) = agg(i) == 0.0 ? std::numeric_limits<double>::quiet_NaN() : system.z(i) / agg(i);
    }
    return k;
}

ReconcileDiagnostics diagnose(const Eigen::VectorXd& tilde_y, const Eigen::VectorXd& hat_y,
                              const ConstraintSystem& system) {
    ReconcileDiagnostics d;
    d.adjustment_factors = adjustment_factors(tilde_y, system);
    d.max_violation_before = (system.m * tilde_y - system.z).cwiseAbs().maxCoeff();
    d.max_violation_after = (system.m * hat_y - system.z).cwiseAbs().maxCoeff();
    d.adjustment_norm = (hat_y - tilde_y).norm();
    d.unconstrained.assign(static_cast<std::size_t>(system.months()), true);
    for (long e : system.quarter_ends) {
        for (long m = e - 3; m < e; ++m) d.unconstrained[static_cast<std::size_t>(m)] = false;
    }
    return d;
}

Series recover_levels(const Series& hat_y, double base_level) {
    if (!(base_level > 0.0) || !std::isfinite(base_level)) throw std::invalid_argument("base level must be positive");
    std::vector<double> out(hat_y.size());
    double level = base_level;
    for (std::size_t i = 0; i < hat_y.size(); ++i) {
        if (!std::isfinite(hat_y[i])) {
            throw std::invalid_argument("non-finite growth at " + hat_y.period(i).to_string());
        }
        level *= std::exp(hat_y[i]);
        out[i] = level;
    }
    return Series(hat_y.start(), std::move(out), "level");
}

Series annualize(const Series& hat_y) {
    const std::size_t n = hat_y.size();
    if (n < 5) throw std::invalid_argument("annualization needs at least 5 observations");
    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t t = 4; t < n; ++t) {
        // Integer weights 1,2,3,2,1 over 3, in extended precision: for constant growth every
        // partial sum is exact, so the result rounds to exactly 1200 g.
        static constexpr int w3[5] = {1, 2, 3, 2, 1};
        long double s = 0.0L;
        for (std::size_t w = 0; w < 5; ++w) s += static_cast<long double>(w3[w]) * hat_y[t - w];
        out[t] = static_cast<double>(s * 400.0L / 3.0L);
    }
    return Series(hat_y.start(), std::move(out), "annualized");
}

}  // namespace disagg
