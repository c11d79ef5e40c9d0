#include "disagg/evaluate.hpp"

#include "disagg/errors.hpp"
#include "disagg/log.hpp"
#include "disagg/parallel.hpp"
#include "disagg/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace disagg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StepData {
    Panel train_x;
    Series train_y;
    Panel test_x;
};

StepData step_data(const Panel& x, const Series& y, std::size_t t, const TransformSpec& transforms) {
    StepData d{x.slice_rows(0, t), y.slice(0, t), x.slice_rows(t, 1)};
    if (!transforms.kinds().empty()) {
        auto s = Standardizer::fit(d.train_x, transforms);
        d.train_x = s.apply(d.train_x);
        d.test_x = s.apply(d.test_x);
    }
    return d;
}

void run_step(const RegressorSpec& spec, const FitResult* tuned, const Panel& x, const Series& y, std::size_t t,
              const WindowProtocol& protocol, StepRecord& rec, FitResult* searched_out) {
    rec.target = y.period(t);
    rec.train_rows = t;
    rec.actual = y[t];
    try {
        StepData d = step_data(x, y, t, protocol.transforms);
        const std::uint64_t seed = spec.seed + t;
        FitResult f;
        if (tuned == nullptr) {
            RegressorSpec s = spec;
            s.seed = seed;
            f = fit(s, d.train_x, d.train_y);
            rec.searched = true;
        } else {
            f = refit(spec, *tuned, d.train_x, d.train_y, seed);
        }
        rec.fingerprint = f.fingerprint;
        rec.prediction = predict(f, d.test_x)[0];
        if (!std::isfinite(rec.prediction)) throw std::runtime_error("non-finite prediction");
        if (searched_out != nullptr) *searched_out = std::move(f);
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.prediction = kNaN;
        rec.error = e.what();
        log::warn("step " + rec.target.to_string() + " failed: " + e.what());
    }
}

}  // namespace

std::size_t initial_window(std::size_t n, const WindowProtocol& protocol) {
    if (protocol.initial_window) {
        if (*protocol.initial_window < 1 || *protocol.initial_window >= n) {
            throw std::invalid_argument("initial window must leave at least one test row");
        }
        return *protocol.initial_window;
    }
    if (!(protocol.initial_ratio > 0.0 && protocol.initial_ratio < 1.0)) {
        throw std::invalid_argument("initial ratio must lie in (0, 1)");
    }
    const std::size_t t0 = train_size(n, protocol.initial_ratio);
    if (t0 >= n) throw std::invalid_argument("initial window leaves no test rows");
    return t0;
}

WindowResult run_expanding_window(const RegressorSpec& spec, const Panel& x, const Series& y,
                                  const WindowProtocol& protocol) {
    const std::size_t n = x.rows();
    if (n != y.size() || x.start() != y.start()) throw std::invalid_argument("regressors and target are not aligned");
    if (n < 8) throw std::invalid_argument("expanding window needs at least 8 observations");
    const std::size_t t0 = initial_window(n, protocol);

    WindowResult out;
    out.steps.resize(n - t0);

    // The search step runs first; a failed search is retried at the next step.
    std::size_t k = 0;
    bool have_tuned = false;
    for (; k < out.steps.size() && !have_tuned; ++k) {
        run_step(spec, nullptr, x, y, t0 + k, protocol, out.steps[k], &out.tuned);
        have_tuned = !out.steps[k].failed;
    }
    if (have_tuned) {
        const std::size_t first = k;
        parallel_for(
            out.steps.size() - first,
            [&](std::size_t i) {
                run_step(spec, &out.tuned, x, y, t0 + first + i, protocol, out.steps[first + i], nullptr);
            },
            protocol.workers);
    }

    std::vector<double> pred, act;
    for (const auto& s : out.steps) {
        pred.push_back(s.prediction);
        act.push_back(s.actual);
        if (s.failed) ++out.failed_steps;
    }
    if (static_cast<double>(out.failed_steps) > protocol.max_failed_fraction * static_cast<double>(out.steps.size())) {
        throw NumericalError(std::to_string(out.failed_steps) + " of " + std::to_string(out.steps.size()) +
                             " window steps failed");
    }
    out.predictions = Series(y.period(t0), std::move(pred), to_string(spec.kind));
    out.actuals = Series(y.period(t0), std::move(act), y.name());
    return out;
}

MetricSet compute_metrics(const Series& predictions, const Series& actuals) {
    std::vector<double> p, a;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const long j = actuals.index_of(predictions.period(i));
        if (j < 0) continue;
        const double yi = actuals[static_cast<std::size_t>(j)];
        if (!std::isfinite(predictions[i]) || !std::isfinite(yi)) continue;
        p.push_back(predictions[i]);
        a.push_back(yi);
    }
    if (p.size() < 2) throw std::invalid_argument("metrics need at least 2 prediction/actual pairs");
    MetricSet m;
    m.n = p.size();
    const double nn = static_cast<double>(m.n);
    const double abar = stats::mean(a);
    double sse = 0.0, sae = 0.0, sst = 0.0, hits = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
        const double e = p[i] - a[i];
        sse += e * e;
        sae += std::abs(e);
        sst += (a[i] - abar) * (a[i] - abar);
        if ((p[i] >= 0.0) == (a[i] >= 0.0)) hits += 1.0;
    }
    m.rmse = std::sqrt(sse / nn);
    m.mae = sae / nn;
    m.r2 = sst > 0.0 ? 1.0 - sse / sst : kNaN;
    m.correlation = stats::pearson(p, a);
    m.sign_accuracy = hits / nn;
    return m;
}

int default_bandwidth(std::size_t t) {
    return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(t) / 100.0, 2.0 / 9.0)));
}

DmResult dm_test(const Series& errors_1, const Series& errors_2, std::optional<int> bandwidth) {
    std::vector<double> d;
    for (std::size_t i = 0; i < errors_1.size(); ++i) {
        const long j = errors_2.index_of(errors_1.period(i));
        if (j < 0) continue;
        const double e1 = errors_1[i];
        const double e2 = errors_2[static_cast<std::size_t>(j)];
        if (!std::isfinite(e1) || !std::isfinite(e2)) continue;
        d.push_back(e1 * e1 - e2 * e2);
    }
    const std::size_t t = d.size();
    if (t < 10) throw std::invalid_argument("DM test needs at least 10 paired errors");
    DmResult r;
    r.n = t;
    r.bandwidth = bandwidth ? *bandwidth : default_bandwidth(t);
    if (r.bandwidth < 0 || static_cast<std::size_t>(r.bandwidth) >= t) {
        throw std::invalid_argument("DM bandwidth out of range");
    }
    double sum = 0.0;
    for (double v : d) sum += v;
    const double dbar = sum / static_cast<double>(t);
    auto gamma = [&](int lag) {
        double acc = 0.0;
        for (std::size_t i = static_cast<std::size_t>(lag); i < t; ++i) acc += (d[i] - dbar) * (d[i - lag] - dbar);
        return acc / static_cast<double>(t);
    };
    const double g0 = gamma(0);
    double s = g0;
    for (int l = 1; l <= r.bandwidth; ++l) {
        s += 2.0 * (1.0 - static_cast<double>(l) / static_cast<double>(r.bandwidth + 1)) * gamma(l);
    }
    if (!(g0 > 0.0) || !(s > 0.0)) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.statistic = dbar / std::sqrt(s / static_cast<double>(t));
    r.p_value = stats::two_sided_normal_p(r.statistic);
    return r;
}

Series forecast_errors(const WindowResult& result) {
    std::vector<double> e(result.predictions.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = result.predictions[i] - result.actuals[i];
    return Series(result.predictions.start(), std::move(e), result.predictions.name());
}

std::vector<DmEntry> dm_matrix(const std::vector<std::pair<std::string, Series>>& errors,
                               std::optional<int> bandwidth) {
    std::vector<DmEntry> out;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        for (std::size_t j = i + 1; j < errors.size(); ++j) {
            out.push_back({errors[i].first, errors[j].first, dm_test(errors[i].second, errors[j].second, bandwidth)});
        }
    }
    return out;
}

}  // namespace disagg
