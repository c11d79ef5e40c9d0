#include "disagg/regressors.hpp"

#include "disagg/hash.hpp"
#include "disagg/log.hpp"

#include <algorithm>
#include <stdexcept>

namespace disagg {

using nlohmann::json;

std::string to_string(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::ChowLin: return "chow_lin";
        case RegressorKind::ElasticNet: return "elastic_net";
        case RegressorKind::GradientBoost: return "gradient_boost";
        case RegressorKind::FeedForward: return "feedforward";
    }
    return "chow_lin";
}

RegressorKind parse_regressor_kind(const std::string& text) {
    if (text == "chow_lin") return RegressorKind::ChowLin;
    if (text == "elastic_net") return RegressorKind::ElasticNet;
    if (text == "gradient_boost") return RegressorKind::GradientBoost;
    if (text == "feedforward") return RegressorKind::FeedForward;
    throw std::invalid_argument("unknown regressor kind: " + text);
}

std::uint64_t training_fingerprint(const Panel& x, const Series& y) {
    Fnv1a h;
    h.i64(x.start().ordinal()).i64(static_cast<std::int64_t>(x.rows()));
    for (const auto& nm : x.names()) h.str(nm);
    const auto& d = x.data();
    for (long j = 0; j < d.cols(); ++j)
        for (long i = 0; i < d.rows(); ++i) h.f64(d(i, j));
    h.i64(y.start().ordinal());
    for (double v : y.values()) h.f64(v);
    return h.digest();
}

namespace {

void check_training(const Panel& x, const Series& y) {
    if (x.rows() != y.size()) throw std::invalid_argument("regressors and target differ in length");
    if (x.rows() == 0) throw std::invalid_argument("empty training window");
}

FitResult make_result(RegressorKind kind, const Panel& x, const Series& y, std::uint64_t seed, ModelState state) {
    FitResult r;
    r.kind = kind;
    r.columns = x.names();
    r.state = std::move(state);
    r.seed = seed;
    r.fingerprint = training_fingerprint(x, y);
    return r;
}

FitResult chow_lin_quarterly(const Panel& x, const Series& y, const ChowLinOptions& opts, std::uint64_t seed) {
    check_training(x, y);
    ChowLinState st = chow_lin::estimate(x.data(), y.vector(), opts, 1.0);
    FitResult r = make_result(RegressorKind::ChowLin, x, y, seed, st);
    if (st.at_boundary) r.warnings.push_back("rho estimate at search boundary");
    return r;
}

}  // namespace

FitResult fit(const RegressorSpec& spec, const Panel& x, const Series& y) {
    check_training(x, y);
    switch (spec.kind) {
        case RegressorKind::ChowLin: return chow_lin_quarterly(x, y, spec.chow_lin, spec.seed);
        case RegressorKind::ElasticNet: return fit_elastic_net(x, y, spec.elastic_net.folds, spec.elastic_net);
        case RegressorKind::GradientBoost: return fit_gradient_boost(x, y, spec.boost, spec.seed);
        case RegressorKind::FeedForward: return fit_feedforward(x, y, spec.feedforward, spec.seed);
    }
    throw std::logic_error("unhandled regressor kind");
}

FitResult refit(const RegressorSpec& spec, const FitResult& tuned, const Panel& x, const Series& y,
                std::uint64_t seed) {
    check_training(x, y);
    if (tuned.kind != spec.kind) throw std::invalid_argument("tuned fit kind does not match spec");
    switch (spec.kind) {
        case RegressorKind::ChowLin: return chow_lin_quarterly(x, y, spec.chow_lin, seed);
        case RegressorKind::ElasticNet: {
            const auto& prior = std::get<ElasticNetState>(tuned.state);
            return make_result(spec.kind, x, y, seed,
                               enet::fit_fixed(x.data(), y.vector(), prior.params, spec.elastic_net));
        }
        case RegressorKind::GradientBoost: {
            const auto& prior = std::get<BoostState>(tuned.state);
            return make_result(spec.kind, x, y, seed, gbt::train(x.data(), y.vector(), prior.params, seed));
        }
        case RegressorKind::FeedForward: {
            const auto& prior = std::get<NetworkState>(tuned.state);
            return make_result(spec.kind, x, y, seed,
                               ffn::fit_fixed(x.data(), y.vector(), prior.params, spec.feedforward, seed));
        }
    }
    throw std::logic_error("unhandled regressor kind");
}

Eigen::VectorXd predict_rows(const FitResult& fit, const Eigen::MatrixXd& x) {
    if (static_cast<std::size_t>(x.cols()) != fit.columns.size()) {
        throw std::invalid_argument("prediction matrix has the wrong number of columns");
    }
    return std::visit(
        [&](const auto& st) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, ChowLinState> || std::is_same_v<T, ElasticNetState>) {
                return (x * st.beta).array() + st.intercept;
            } else if constexpr (std::is_same_v<T, BoostState>) {
                return gbt::predict(st, x);
            } else {
                return ffn::predict(st, x);
            }
        },
        fit.state);
}

Series predict(const FitResult& fit, const Panel& x) {
    if (x.names() != fit.columns) {
        std::string missing, extra;
        for (const auto& c : fit.columns) {
            if (x.column_index(c) < 0) missing += (missing.empty() ? "" : ", ") + c;
        }
        for (const auto& c : x.names()) {
            if (std::find(fit.columns.begin(), fit.columns.end(), c) == fit.columns.end()) {
                extra += (extra.empty() ? "" : ", ") + c;
            }
        }
        throw std::invalid_argument("column mismatch; missing: [" + missing + "] extra: [" + extra + "]" +
                                    (missing.empty() && extra.empty() ? " (order differs)" : ""));
    }
    Eigen::VectorXd p = predict_rows(fit, x.data());
    if (const auto* cl = std::get_if<ChowLinState>(&fit.state);
        cl && cl->intercept_per_month && x.frequency() == Frequency::Quarterly) {
        p.array() += 2.0 * cl->intercept;
    }
    return Series(x.start(), std::vector<double>(p.data(), p.data() + p.size()), "prediction");
}

FitResult fit_chow_lin(const Panel& x_monthly, const Series& y_quarterly, const ChowLinOptions& opts) {
    if (x_monthly.frequency() != Frequency::Monthly || y_quarterly.frequency() != Frequency::Quarterly) {
        throw std::invalid_argument("Chow-Lin expects monthly regressors and a quarterly target");
    }
    if (x_monthly.start() != y_quarterly.start().quarter_end_month() - 2 ||
        x_monthly.rows() != 3 * y_quarterly.size()) {
        throw std::invalid_argument("mismatched month/quarter alignment");
    }
    const long q = static_cast<long>(y_quarterly.size());
    Eigen::MatrixXd xq(q, x_monthly.data().cols());
    for (long a = 0; a < q; ++a) xq.row(a) = x_monthly.data().middleRows(3 * a, 3).colwise().sum();
    ChowLinState st = chow_lin::estimate(xq, y_quarterly.vector(), opts, 3.0);
    st.intercept_per_month = true;
    FitResult r = make_result(RegressorKind::ChowLin, x_monthly, Series(x_monthly.start(), {}), 0, st);
    r.fingerprint = training_fingerprint(Panel(y_quarterly.start(), x_monthly.names(), xq), y_quarterly);
    if (st.at_boundary) {
        r.warnings.push_back("rho estimate at search boundary");
        log::warn("Chow-Lin rho estimate at search boundary");
    }
    return r;
}

Series chow_lin_distribute(const FitResult& fit, const Panel& x_monthly, const Series& y_quarterly) {
    const auto* st = std::get_if<ChowLinState>(&fit.state);
    if (!st) throw std::invalid_argument("chow_lin_distribute needs a Chow-Lin fit");
    if (x_monthly.frequency() != Frequency::Monthly || y_quarterly.frequency() != Frequency::Quarterly ||
        x_monthly.start() != y_quarterly.start().quarter_end_month() - 2 ||
        x_monthly.rows() != 3 * y_quarterly.size()) {
        throw std::invalid_argument("mismatched month/quarter alignment");
    }
    Eigen::VectorXd monthly = predict(fit, x_monthly).vector();
    if (!st->intercept_per_month) monthly.array() -= st->intercept * (2.0 / 3.0);
    Eigen::VectorXd out = chow_lin::distribute(monthly, y_quarterly.vector(), st->rho);
    return Series(x_monthly.start(), std::vector<double>(out.data(), out.data() + out.size()), "chow_lin");
}

FitResult fit_elastic_net(const Panel& x, const Series& y, int folds, const ElasticNetOptions& opts) {
    check_training(x, y);
    ElasticNetOptions o = opts;
    o.folds = folds;
    return make_result(RegressorKind::ElasticNet, x, y, 0, enet::fit_cv(x.data(), y.vector(), o));
}

BootstrapResult bootstrap_elastic_net(const FitResult& tuned, const Panel& x, const Series& y,
                                      const enet::BootstrapOptions& bopts, const ElasticNetOptions& opts) {
    check_training(x, y);
    const auto* prior = std::get_if<ElasticNetState>(&tuned.state);
    if (!prior) throw std::invalid_argument("bootstrap needs an elastic net fit");
    BootstrapResult out;
    out.summary = enet::bootstrap(x.data(), y.vector(), prior->params, opts, bopts);
    if (out.summary.skipped > 0) log::warn(std::to_string(out.summary.skipped) + " degenerate bootstrap resample(s) skipped");
    ElasticNetState st = *prior;
    st.intercept = out.summary.mean(0);
    st.beta = out.summary.mean.tail(out.summary.mean.size() - 1);
    out.fit = make_result(RegressorKind::ElasticNet, x, y, bopts.seed, st);
    return out;
}

FitResult fit_gradient_boost(const Panel& x, const Series& y, const BoostGrid& grid, std::uint64_t seed) {
    check_training(x, y);
    return make_result(RegressorKind::GradientBoost, x, y, seed, gbt::fit_cv(x.data(), y.vector(), grid, seed));
}

FitResult fit_feedforward(const Panel& x, const Series& y, const FeedForwardOptions& opts, std::uint64_t seed) {
    check_training(x, y);
    NetworkState st = ffn::fit_search(x.data(), y.vector(), opts, seed);
    FitResult r = make_result(RegressorKind::FeedForward, x, y, seed, st);
    if (st.trials_diverged > 0) r.warnings.push_back(std::to_string(st.trials_diverged) + " trial(s) diverged");
    return r;
}

// ---------------------------------------------------------------------------------------------
// Serialization

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vec(const json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", flat}};
}

Eigen::MatrixXd json_mat(const json& j) {
    const long r = j.at("rows").get<long>(), c = j.at("cols").get<long>();
    auto flat = j.at("values").get<std::vector<double>>();
    if (static_cast<long>(flat.size()) != r * c) throw std::invalid_argument("matrix size mismatch in fit document");
    Eigen::MatrixXd m(r, c);
    for (long i = 0; i < r; ++i)
        for (long k = 0; k < c; ++k) m(i, k) = flat[static_cast<std::size_t>(i * c + k)];
    return m;
}

json boost_params_json(const BoostParams& p) {
    return {{"max_depth", p.max_depth},     {"learning_rate", p.learning_rate}, {"trees", p.trees},
            {"subsample", p.subsample},     {"leaf_l2", p.leaf_l2},             {"min_child_weight", p.min_child_weight},
            {"gamma", p.gamma}};
}

json network_params_json(const NetworkParams& p) {
    return {{"units", p.units}, {"activation", to_string(p.activation)}, {"dropout", p.dropout}};
}

}  // namespace

json hyperparameters_json(const FitResult& fit) {
    return std::visit(
        [](const auto& st) -> json {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, ChowLinState>) {
                return json::object();
            } else if constexpr (std::is_same_v<T, ElasticNetState>) {
                return {{"alpha", st.params.alpha}, {"l1_ratio", st.params.l1_ratio}};
            } else if constexpr (std::is_same_v<T, BoostState>) {
                return boost_params_json(st.params);
            } else {
                return network_params_json(st.params);
            }
        },
        fit.state);
}

json to_json(const FitResult& fit) {
    json doc;
    doc["format"] = "disagg-fit";
    doc["version"] = 1;
    doc["kind"] = to_string(fit.kind);
    doc["columns"] = fit.columns;
    doc["seed"] = fit.seed;
    doc["fingerprint"] = hex64(fit.fingerprint);
    doc["hyperparameters"] = hyperparameters_json(fit);
    doc["warnings"] = fit.warnings;
    json state;
    std::visit(
        [&](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, ChowLinState>) {
                state = {{"intercept", st.intercept},         {"beta", vec_json(st.beta)},
                         {"rho", st.rho},                     {"sigma2", st.sigma2},
                         {"loglik", st.loglik},               {"has_intercept", st.has_intercept},
                         {"intercept_per_month", st.intercept_per_month}, {"at_boundary", st.at_boundary}};
            } else if constexpr (std::is_same_v<T, ElasticNetState>) {
                state = {{"intercept", st.intercept}, {"beta", vec_json(st.beta)}, {"cv_mse", st.cv_mse}};
            } else if constexpr (std::is_same_v<T, BoostState>) {
                json trees = json::array();
                for (const auto& t : st.trees) {
                    std::vector<int> feat, left, right;
                    std::vector<double> thr, val;
                    for (const auto& nd : t.nodes) {
                        feat.push_back(nd.feature);
                        left.push_back(nd.left);
                        right.push_back(nd.right);
                        thr.push_back(nd.threshold);
                        val.push_back(nd.value);
                    }
                    trees.push_back({{"feature", feat}, {"threshold", thr}, {"left", left}, {"right", right}, {"value", val}});
                }
                state = {{"base_score", st.base_score}, {"cv_mse", st.cv_mse}, {"trees", trees}};
            } else {
                json layers = json::array();
                for (std::size_t l = 0; l < st.weights.size(); ++l) {
                    layers.push_back({{"weights", mat_json(st.weights[l])}, {"bias", vec_json(st.biases[l])}});
                }
                state = {{"layers", layers},         {"val_mse", st.val_mse},           {"best_epoch", st.best_epoch},
                         {"trials_run", st.trials_run}, {"trials_diverged", st.trials_diverged}};
            }
        },
        fit.state);
    doc["state"] = state;
    return doc;
}

FitResult fit_from_json(const json& doc) {
    if (doc.value("format", "") != "disagg-fit") throw std::invalid_argument("not a fit document");
    if (doc.at("version").get<int>() != 1) throw std::invalid_argument("unsupported fit document version");
    FitResult r;
    r.kind = parse_regressor_kind(doc.at("kind").get<std::string>());
    r.columns = doc.at("columns").get<std::vector<std::string>>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.fingerprint = std::stoull(doc.at("fingerprint").get<std::string>(), nullptr, 16);
    r.warnings = doc.value("warnings", std::vector<std::string>{});
    const json& hp = doc.at("hyperparameters");
    const json& s = doc.at("state");
    switch (r.kind) {
        case RegressorKind::ChowLin: {
            ChowLinState st;
            st.intercept = s.at("intercept");
            st.beta = json_vec(s.at("beta"));
            st.rho = s.at("rho");
            st.sigma2 = s.at("sigma2");
            st.loglik = s.at("loglik");
            st.has_intercept = s.at("has_intercept");
            st.intercept_per_month = s.at("intercept_per_month");
            st.at_boundary = s.at("at_boundary");
            r.state = st;
            break;
        }
        case RegressorKind::ElasticNet: {
            ElasticNetState st;
            st.intercept = s.at("intercept");
            st.beta = json_vec(s.at("beta"));
            st.cv_mse = s.at("cv_mse");
            st.params = {hp.at("alpha").get<double>(), hp.at("l1_ratio").get<double>()};
            r.state = st;
            break;
        }
        case RegressorKind::GradientBoost: {
            BoostState st;
            st.base_score = s.at("base_score");
            st.cv_mse = s.at("cv_mse");
            st.params = {hp.at("max_depth").get<int>(),   hp.at("learning_rate").get<double>(),
                         hp.at("trees").get<int>(),       hp.at("subsample").get<double>(),
                         hp.at("leaf_l2").get<double>(),  hp.at("min_child_weight").get<double>(),
                         hp.at("gamma").get<double>()};
            for (const auto& t : s.at("trees")) {
                RegressionTree tree;
                auto feat = t.at("feature").get<std::vector<int>>();
                auto left = t.at("left").get<std::vector<int>>();
                auto right = t.at("right").get<std::vector<int>>();
                auto thr = t.at("threshold").get<std::vector<double>>();
                auto val = t.at("value").get<std::vector<double>>();
                for (std::size_t i = 0; i < feat.size(); ++i) tree.nodes.push_back({feat[i], thr[i], left[i], right[i], val[i]});
                st.trees.push_back(std::move(tree));
            }
            r.state = std::move(st);
            break;
        }
        case RegressorKind::FeedForward: {
            NetworkState st;
            st.params.units = hp.at("units").get<std::vector<int>>();
            st.params.activation = parse_activation(hp.at("activation").get<std::string>());
            st.params.dropout = hp.at("dropout");
            for (const auto& l : s.at("layers")) {
                st.weights.push_back(json_mat(l.at("weights")));
                st.biases.push_back(json_vec(l.at("bias")));
            }
            st.val_mse = s.at("val_mse");
            st.best_epoch = s.at("best_epoch");
            st.trials_run = s.at("trials_run");
            st.trials_diverged = s.at("trials_diverged");
            r.state = std::move(st);
            break;
        }
    }
    return r;
}

}  // namespace disagg
