#include "disagg/preprocess.hpp"

#include "disagg/log.hpp"

#include <cmath>
#include <stdexcept>

namespace disagg {

std::string to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::LogDiff: return "logdiff";
        case TransformKind::Diff: return "diff";
        case TransformKind::Level: return "level";
    }
    return "level";
}

TransformKind parse_transform_kind(const std::string& text) {
    if (text == "logdiff" || text == "log_diff" || text == "LogDiff") return TransformKind::LogDiff;
    if (text == "diff" || text == "Diff") return TransformKind::Diff;
    if (text == "level" || text == "Level") return TransformKind::Level;
    throw std::invalid_argument("unknown transform kind: " + text);
}

bool TransformSpec::contains(const std::string& column) const {
    return kinds_.count(column) > 0 || kinds_.count(base_column_name(column)) > 0;
}

TransformKind TransformSpec::kind(const std::string& column) const {
    if (auto it = kinds_.find(column); it != kinds_.end()) return it->second;
    if (auto it = kinds_.find(base_column_name(column)); it != kinds_.end()) return it->second;
    throw std::invalid_argument("no transform declared for column " + column);
}

double adf_critical_value(double level, std::size_t nobs) {
    // MacKinnon (2010), Table 2, N=1, constant, no trend.
    static constexpr double k1[] = {-3.43035, -6.5393, -16.786, -79.433};
    static constexpr double k5[] = {-2.86154, -2.8903, -4.234, -40.040};
    static constexpr double k10[] = {-2.56677, -1.5384, -2.809, 0.0};
    const double* b = nullptr;
    if (std::abs(level - 0.01) < 1e-12) b = k1;
    else if (std::abs(level - 0.05) < 1e-12) b = k5;
    else if (std::abs(level - 0.10) < 1e-12) b = k10;
    else throw std::invalid_argument("ADF critical values available at 1%, 5% and 10% only");
    const double inv = 1.0 / static_cast<double>(nobs);
    return b[0] + b[1] * inv + b[2] * inv * inv + b[3] * inv * inv * inv;
}

AdfResult adf_test(const Series& series, int max_lag) {
    if (max_lag < 0) throw std::invalid_argument("max_lag must be non-negative");
    const auto& x = series.values();
    const long n = static_cast<long>(x.size());
    if (n <= max_lag + 10) throw std::invalid_argument("series too short for ADF with " + std::to_string(max_lag) + " lags");
    for (double v : x) {
        if (!std::isfinite(v)) throw std::invalid_argument("ADF input contains missing values");
    }
    Eigen::VectorXd xv = series.vector();
    if ((xv.array() - xv.mean()).abs().maxCoeff() == 0.0) throw std::invalid_argument("degenerate series");

    Eigen::VectorXd dx = xv.tail(n - 1) - xv.head(n - 1);  // dx[i] = x[i+1] - x[i]
    const long p = max_lag;
    const long nobs = n - 1 - p;
    const long k = 2 + p;
    Eigen::MatrixXd design(nobs, k);
    Eigen::VectorXd resp(nobs);
    for (long r = 0; r < nobs; ++r) {
        const long t = r + p;  // index into dx
        resp(r) = dx(t);
        design(r, 0) = 1.0;
        design(r, 1) = xv(t);
        for (long l = 1; l <= p; ++l) design(r, 1 + l) = dx(t - l);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < k) throw std::invalid_argument("degenerate series");
    Eigen::VectorXd coef = qr.solve(resp);
    Eigen::VectorXd resid = resp - design * coef;
    const double s2 = resid.squaredNorm() / static_cast<double>(nobs - k);
    Eigen::MatrixXd xtx_inv = (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    const double se = std::sqrt(s2 * xtx_inv(1, 1));

    AdfResult out;
    out.statistic = coef(1) / se;
    out.lags = max_lag;
    out.nobs = static_cast<std::size_t>(nobs);
    out.critical_1pct = adf_critical_value(0.01, out.nobs);
    out.critical_5pct = adf_critical_value(0.05, out.nobs);
    out.critical_10pct = adf_critical_value(0.10, out.nobs);
    out.decision = out.statistic < out.critical_5pct ? AdfDecision::Stationary : AdfDecision::UnitRoot;
    return out;
}

Panel transform_panel(const Panel& panel, const TransformSpec& spec) {
    const auto& names = panel.names();
    bool any_diff = false;
    for (const auto& nm : names) any_diff = any_diff || spec.is_differenced(nm);
    const long n = static_cast<long>(panel.rows());
    if (!any_diff) return panel;
    if (n < 2) throw std::invalid_argument("differencing needs at least two rows");

    const auto& data = panel.data();
    Eigen::MatrixXd out(n - 1, data.cols());
    for (long j = 0; j < data.cols(); ++j) {
        const auto kind = spec.kind(names[static_cast<std::size_t>(j)]);
        for (long i = 1; i < n; ++i) {
            const double cur = data(i, j);
            const double prev = data(i - 1, j);
            switch (kind) {
                case TransformKind::LogDiff: {
                    for (long r : {i - 1, i}) {
                        if (!(data(r, j) > 0.0)) {
                            throw std::invalid_argument("non-positive value in log-differenced column " +
                                                        names[static_cast<std::size_t>(j)] + " at " +
                                                        panel.period(static_cast<std::size_t>(r)).to_string());
                        }
                    }
                    out(i - 1, j) = std::log(cur) - std::log(prev);
                    break;
                }
                case TransformKind::Diff: out(i - 1, j) = cur - prev; break;
                case TransformKind::Level: out(i - 1, j) = cur; break;
            }
        }
    }
    return Panel(panel.start() + 1, names, std::move(out));
}

Panel aggregate_quarterly(const Panel& monthly, const TransformSpec& spec) {
    if (monthly.frequency() != Frequency::Monthly) throw std::invalid_argument("aggregate_quarterly expects a monthly panel");
    const long n = static_cast<long>(monthly.rows());
    long first = 0;
    while (first < n && (monthly.period(static_cast<std::size_t>(first)).sub() - 1) % 3 != 0) ++first;
    if (first > 0) log::warn("dropping " + std::to_string(first) + " month(s) of an incomplete leading quarter");
    const long q_count = (n - first) / 3;
    const long trailing = n - first - 3 * q_count;
    if (trailing > 0) log::warn("dropping " + std::to_string(trailing) + " month(s) of an incomplete trailing quarter");
    if (q_count <= 0) throw std::invalid_argument("no complete quarter in monthly panel");

    const auto& data = monthly.data();
    Eigen::MatrixXd out(q_count, data.cols());
    for (long j = 0; j < data.cols(); ++j) {
        const bool sum = spec.is_differenced(monthly.names()[static_cast<std::size_t>(j)]);
        for (long q = 0; q < q_count; ++q) {
            const double s = data(first + 3 * q, j) + data(first + 3 * q + 1, j) + data(first + 3 * q + 2, j);
            out(q, j) = sum ? s : s / 3.0;
        }
    }
    return Panel(monthly.period(static_cast<std::size_t>(first)).to_quarter(), monthly.names(), std::move(out));
}

Standardizer Standardizer::fit(const Panel& train, const TransformSpec& spec) {
    Standardizer s;
    const long n = static_cast<long>(train.rows());
    for (std::size_t j = 0; j < train.cols(); ++j) {
        const auto& nm = train.names()[j];
        if (spec.kind(nm) != TransformKind::Level) continue;
        if (n < 2) throw std::invalid_argument("standardizer needs at least two training rows");
        auto col = train.data().col(static_cast<long>(j));
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / static_cast<double>(n - 1);
        const double sd = std::sqrt(var);
        if (!(sd > 0.0)) throw std::invalid_argument("constant level column: " + nm);
        s.moments_[nm] = {mean, sd};
    }
    return s;
}

Panel Standardizer::apply(const Panel& panel) const {
    Eigen::MatrixXd data = panel.data();
    for (std::size_t j = 0; j < panel.cols(); ++j) {
        auto it = moments_.find(panel.names()[j]);
        if (it == moments_.end()) continue;
        data.col(static_cast<long>(j)) = (data.col(static_cast<long>(j)).array() - it->second.mean) / it->second.sd;
    }
    return Panel(panel.start(), panel.names(), std::move(data));
}

StandardizedSplit fit_apply_standardizer(const Panel& train, const Panel& test, const TransformSpec& spec) {
    if (train.rows() == 0) throw std::invalid_argument("empty training panel");
    auto s = Standardizer::fit(train, spec);
    return {s.apply(train), s.apply(test), s};
}

}  // namespace disagg
