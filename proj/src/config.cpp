#include "disagg/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace disagg {

using nlohmann::json;

std::string to_string(ReconcileMode m) { return m == ReconcileMode::Ma5 ? "ma5" : "denton"; }

ReconcileMode parse_reconcile_mode(const std::string& text) {
    if (text == "ma5") return ReconcileMode::Ma5;
    if (text == "denton") return ReconcileMode::Denton;
    throw std::invalid_argument("unknown reconciliation mode '" + text + "' (expected ma5 or denton)");
}

std::string RunConfig::master_path() const {
    std::string p = master_file;
    for (auto pos = p.find("{country}"); pos != std::string::npos; pos = p.find("{country}")) {
        p.replace(pos, 9, country);
    }
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (std::filesystem::path(base_dir) / fp).lexically_normal().string();
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& section) {
    if (!j.is_object()) throw std::invalid_argument("config: " + section + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw std::invalid_argument("config: unknown key '" + k + "' in " + section);
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: bad value for " + section + "." + key);
    }
}

Eigen::VectorXd read_vec(const json& j, const char* key, const Eigen::VectorXd& fallback, const std::string& section) {
    std::vector<double> v;
    read(j, key, v, section);
    if (!j.contains(key)) return fallback;
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

RegressorSpec regressor_from_json(const json& j, std::size_t index) {
    const std::string sec = "regressors[" + std::to_string(index) + "]";
    if (!j.is_object() || !j.contains("kind")) throw std::invalid_argument("config: " + sec + " needs a kind");
    RegressorSpec r;
    r.kind = parse_regressor_kind(j.at("kind").get<std::string>());
    switch (r.kind) {
        case RegressorKind::ChowLin:
            check_keys(j, {"kind", "intercept", "rho_bound", "grid_points"}, sec);
            read(j, "intercept", r.chow_lin.intercept, sec);
            read(j, "rho_bound", r.chow_lin.rho_bound, sec);
            read(j, "grid_points", r.chow_lin.grid_points, sec);
            if (!(r.chow_lin.rho_bound > 0.0 && r.chow_lin.rho_bound < 1.0)) {
                throw std::invalid_argument("config: " + sec + ".rho_bound must lie in (0, 1)");
            }
            break;
        case RegressorKind::ElasticNet:
            check_keys(j, {"kind", "l1_ratios", "n_alphas", "alpha_min_ratio", "folds", "max_sweeps", "tol", "cv_tol"},
                       sec);
            read(j, "l1_ratios", r.elastic_net.l1_ratios, sec);
            read(j, "n_alphas", r.elastic_net.n_alphas, sec);
            read(j, "alpha_min_ratio", r.elastic_net.alpha_min_ratio, sec);
            read(j, "folds", r.elastic_net.folds, sec);
            read(j, "max_sweeps", r.elastic_net.max_sweeps, sec);
            read(j, "tol", r.elastic_net.tol, sec);
            read(j, "cv_tol", r.elastic_net.cv_tol, sec);
            if (r.elastic_net.folds < 2) throw std::invalid_argument("config: " + sec + ".folds must be >= 2");
            break;
        case RegressorKind::GradientBoost:
            check_keys(j, {"kind", "max_depth", "learning_rate", "trees", "subsample", "leaf_l2", "min_child_weight", "folds"},
                       sec);
            read(j, "max_depth", r.boost.max_depth, sec);
            read(j, "learning_rate", r.boost.learning_rate, sec);
            read(j, "trees", r.boost.trees, sec);
            read(j, "subsample", r.boost.subsample, sec);
            read(j, "leaf_l2", r.boost.leaf_l2, sec);
            read(j, "min_child_weight", r.boost.min_child_weight, sec);
            read(j, "folds", r.boost.folds, sec);
            if (r.boost.size() == 0) throw std::invalid_argument("config: " + sec + " has an empty grid");
            if (r.boost.folds < 2) throw std::invalid_argument("config: " + sec + ".folds must be >= 2");
            break;
        case RegressorKind::FeedForward: {
            check_keys(j, {"kind", "trials", "max_epochs", "patience", "learning_rate", "validation_fraction", "max_layers",
                           "unit_choices", "activations", "dropout_choices"},
                       sec);
            auto& f = r.feedforward;
            read(j, "trials", f.trials, sec);
            read(j, "max_epochs", f.max_epochs, sec);
            read(j, "patience", f.patience, sec);
            read(j, "learning_rate", f.learning_rate, sec);
            read(j, "validation_fraction", f.validation_fraction, sec);
            read(j, "max_layers", f.max_layers, sec);
            read(j, "unit_choices", f.unit_choices, sec);
            read(j, "dropout_choices", f.dropout_choices, sec);
            if (j.contains("activations")) {
                f.activations.clear();
                for (const auto& a : j.at("activations")) f.activations.push_back(parse_activation(a.get<std::string>()));
            }
            if (f.trials < 1) throw std::invalid_argument("config: " + sec + ".trials must be >= 1");
            break;
        }
    }
    return r;
}

json regressor_to_json(const RegressorSpec& r) {
    json j{{"kind", to_string(r.kind)}};
    switch (r.kind) {
        case RegressorKind::ChowLin:
            j.update({{"intercept", r.chow_lin.intercept},
                      {"rho_bound", r.chow_lin.rho_bound},
                      {"grid_points", r.chow_lin.grid_points}});
            break;
        case RegressorKind::ElasticNet:
            j.update({{"l1_ratios", r.elastic_net.l1_ratios},
                      {"n_alphas", r.elastic_net.n_alphas},
                      {"alpha_min_ratio", r.elastic_net.alpha_min_ratio},
                      {"folds", r.elastic_net.folds},
                      {"max_sweeps", r.elastic_net.max_sweeps},
                      {"tol", r.elastic_net.tol},
                      {"cv_tol", r.elastic_net.cv_tol}});
            break;
        case RegressorKind::GradientBoost:
            j.update({{"max_depth", r.boost.max_depth},
                      {"learning_rate", r.boost.learning_rate},
                      {"trees", r.boost.trees},
                      {"subsample", r.boost.subsample},
                      {"leaf_l2", r.boost.leaf_l2},
                      {"min_child_weight", r.boost.min_child_weight},
                      {"folds", r.boost.folds}});
            break;
        case RegressorKind::FeedForward: {
            const auto& f = r.feedforward;
            std::vector<std::string> acts;
            for (auto a : f.activations) acts.push_back(to_string(a));
            j.update({{"trials", f.trials},
                      {"max_epochs", f.max_epochs},
                      {"patience", f.patience},
                      {"learning_rate", f.learning_rate},
                      {"validation_fraction", f.validation_fraction},
                      {"max_layers", f.max_layers},
                      {"unit_choices", f.unit_choices},
                      {"activations", acts},
                      {"dropout_choices", f.dropout_choices}});
            break;
        }
    }
    return j;
}

std::vector<RegressorSpec> default_regressors() {
    std::vector<RegressorSpec> out(4);
    out[0].kind = RegressorKind::ChowLin;
    out[1].kind = RegressorKind::ElasticNet;
    out[2].kind = RegressorKind::GradientBoost;
    out[3].kind = RegressorKind::FeedForward;
    return out;
}

TheoryConfig default_theory() {
    TheoryConfig t;
    t.regime.beta1 = Eigen::VectorXd::Constant(1, 0.0);
    t.regime.beta2 = Eigen::VectorXd::Constant(1, 2.0);
    t.regime.pi = 0.5;
    t.regime.sigma_eps = 0.1;
    t.regime.mean_normal = Eigen::VectorXd::Constant(1, 1.0);
    t.regime.mean_crisis = Eigen::VectorXd::Constant(1, 1.0);
    t.regime.n = 100000;
    t.ridge.d = Eigen::VectorXd::Constant(2, 1.0);
    t.ridge.alpha = Eigen::VectorXd::Constant(2, 1.0);
    t.ridge.sigma2 = 1.0;
    for (int i = 0; i <= 500; ++i) t.ridge.lambdas.push_back(i / 100.0);
    t.ridge.mc_lambda = 1.0;
    t.ridge.mc_reps = 2000;
    return t;
}

}  // namespace

RunConfig config_from_json(const json& doc, const std::string& base_dir) {
    check_keys(doc, {"version", "country", "master_file", "schema", "transforms", "adf_max_lag", "lags", "regressors",
                     "window", "reconciliation", "bootstrap_replications", "base_level", "explain", "dm", "theory",
                     "seed", "output_dir"},
               "top level");
    if (!doc.contains("version")) throw std::invalid_argument("config: missing version");
    if (doc.at("version") != kConfigVersion) {
        throw std::invalid_argument("config: unsupported version " + doc.at("version").dump());
    }
    RunConfig c;
    c.base_dir = base_dir;
    c.regressors = default_regressors();
    c.theory = default_theory();
    const std::string top = "top level";
    read(doc, "country", c.country, top);
    read(doc, "master_file", c.master_file, top);
    read(doc, "adf_max_lag", c.adf_max_lag, top);
    read(doc, "lags", c.lags, top);
    read(doc, "bootstrap_replications", c.bootstrap_replications, top);
    read(doc, "seed", c.seed, top);
    read(doc, "output_dir", c.output_dir, top);
    if (doc.contains("base_level") && !doc.at("base_level").is_null()) {
        double b = 0.0;
        read(doc, "base_level", b, top);
        if (!(b > 0.0)) throw std::invalid_argument("config: base_level must be positive");
        c.base_level = b;
    }
    if (doc.contains("reconciliation")) c.reconciliation = parse_reconcile_mode(doc.at("reconciliation").get<std::string>());
    for (int l : c.lags) {
        if (l < 0) throw std::invalid_argument("config: lags must be non-negative");
    }
    if (c.lags.empty()) throw std::invalid_argument("config: lags must not be empty");
    if (c.bootstrap_replications < 0) throw std::invalid_argument("config: bootstrap_replications must be >= 0");

    if (doc.contains("schema")) {
        const auto& s = doc.at("schema");
        check_keys(s, {"date", "gdp", "gdp_position", "indicators"}, "schema");
        read(s, "date", c.schema.date_column, "schema");
        read(s, "gdp", c.schema.gdp_column, "schema");
        read(s, "indicators", c.schema.indicators, "schema");
        if (s.contains("gdp_position")) c.schema.gdp_position = parse_gdp_position(s.at("gdp_position").get<std::string>());
    }
    if (doc.contains("transforms")) {
        const auto& t = doc.at("transforms");
        if (!t.is_object()) throw std::invalid_argument("config: transforms must be an object");
        for (const auto& [k, v] : t.items()) c.transforms.set(k, parse_transform_kind(v.get<std::string>()));
    }
    if (doc.contains("regressors")) {
        const auto& r = doc.at("regressors");
        if (!r.is_array() || r.empty()) throw std::invalid_argument("config: regressors must be a non-empty array");
        c.regressors.clear();
        for (std::size_t i = 0; i < r.size(); ++i) c.regressors.push_back(regressor_from_json(r[i], i));
    }
    if (doc.contains("window")) {
        const auto& w = doc.at("window");
        check_keys(w, {"initial_ratio", "initial_window", "max_failed_fraction"}, "window");
        read(w, "initial_ratio", c.window.initial_ratio, "window");
        read(w, "max_failed_fraction", c.window.max_failed_fraction, "window");
        if (w.contains("initial_window") && !w.at("initial_window").is_null()) {
            std::size_t t0 = 0;
            read(w, "initial_window", t0, "window");
            c.window.initial_window = t0;
        }
        if (!(c.window.initial_ratio > 0.0 && c.window.initial_ratio < 1.0)) {
            throw std::invalid_argument("config: window.initial_ratio must lie in (0, 1)");
        }
    }
    if (doc.contains("explain")) {
        const auto& e = doc.at("explain");
        check_keys(e, {"enabled", "regressors", "mode", "permutations", "max_background", "top"}, "explain");
        read(e, "enabled", c.explain.enabled, "explain");
        read(e, "mode", c.explain.mode, "explain");
        read(e, "permutations", c.explain.permutations, "explain");
        read(e, "max_background", c.explain.max_background, "explain");
        read(e, "top", c.explain.top, "explain");
        if (e.contains("regressors")) {
            for (const auto& k : e.at("regressors")) c.explain.regressors.push_back(parse_regressor_kind(k.get<std::string>()));
        }
        if (c.explain.mode != "auto" && c.explain.mode != "exact" && c.explain.mode != "sampled") {
            throw std::invalid_argument("config: explain.mode must be auto, exact or sampled");
        }
    }
    if (doc.contains("dm")) {
        const auto& d = doc.at("dm");
        check_keys(d, {"bandwidth"}, "dm");
        if (d.contains("bandwidth") && !d.at("bandwidth").is_null()) {
            int bw = 0;
            read(d, "bandwidth", bw, "dm");
            c.dm_bandwidth = bw;
        }
    }
    if (doc.contains("theory")) {
        const auto& t = doc.at("theory");
        check_keys(t, {"regime", "ridge"}, "theory");
        if (t.contains("regime")) {
            const auto& r = t.at("regime");
            const std::string sec = "theory.regime";
            check_keys(r, {"beta1", "beta2", "pi", "sigma_eps", "mean_normal", "mean_crisis", "x_sd", "n", "seeds"}, sec);
            auto& g = c.theory.regime;
            g.beta1 = read_vec(r, "beta1", g.beta1, sec);
            g.beta2 = read_vec(r, "beta2", g.beta2, sec);
            g.mean_normal = read_vec(r, "mean_normal", g.mean_normal, sec);
            g.mean_crisis = read_vec(r, "mean_crisis", g.mean_crisis, sec);
            read(r, "pi", g.pi, sec);
            read(r, "sigma_eps", g.sigma_eps, sec);
            read(r, "x_sd", g.x_sd, sec);
            read(r, "n", g.n, sec);
            read(r, "seeds", c.theory.regime_seeds, sec);
        }
        if (t.contains("ridge")) {
            const auto& r = t.at("ridge");
            const std::string sec = "theory.ridge";
            check_keys(r, {"d", "alpha", "sigma2", "lambdas", "mc_lambda", "mc_reps", "mc_rows"}, sec);
            auto& g = c.theory.ridge;
            g.d = read_vec(r, "d", g.d, sec);
            g.alpha = read_vec(r, "alpha", g.alpha, sec);
            read(r, "sigma2", g.sigma2, sec);
            read(r, "lambdas", g.lambdas, sec);
            read(r, "mc_reps", g.mc_reps, sec);
            read(r, "mc_rows", g.mc_rows, sec);
            if (r.contains("mc_lambda")) {
                if (r.at("mc_lambda").is_null()) {
                    g.mc_lambda.reset();
                } else {
                    double l = 0.0;
                    read(r, "mc_lambda", l, sec);
                    g.mc_lambda = l;
                }
            }
        }
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path + ": " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path();
    return config_from_json(doc, dir.empty() ? "." : dir.string());
}

json config_to_json(const RunConfig& c) {
    json transforms = json::object();
    for (const auto& [k, v] : c.transforms.kinds()) transforms[k] = to_string(v);
    json regs = json::array();
    for (const auto& r : c.regressors) regs.push_back(regressor_to_json(r));
    std::vector<std::string> explain_regs;
    for (auto k : c.explain.regressors) explain_regs.push_back(to_string(k));
    const auto& g = c.theory.regime;
    const auto& rc = c.theory.ridge;
    return json{
        {"version", kConfigVersion},
        {"country", c.country},
        {"master_file", c.master_file},
        {"schema",
         {{"date", c.schema.date_column},
          {"gdp", c.schema.gdp_column},
          {"gdp_position", to_string(c.schema.gdp_position)},
          {"indicators", c.schema.indicators}}},
        {"transforms", transforms},
        {"adf_max_lag", c.adf_max_lag},
        {"lags", c.lags},
        {"regressors", regs},
        {"window",
         {{"initial_ratio", c.window.initial_ratio},
          {"initial_window", c.window.initial_window ? json(*c.window.initial_window) : json(nullptr)},
          {"max_failed_fraction", c.window.max_failed_fraction}}},
        {"reconciliation", to_string(c.reconciliation)},
        {"bootstrap_replications", c.bootstrap_replications},
        {"base_level", c.base_level ? json(*c.base_level) : json(nullptr)},
        {"explain",
         {{"enabled", c.explain.enabled},
          {"regressors", explain_regs},
          {"mode", c.explain.mode},
          {"permutations", c.explain.permutations},
          {"max_background", c.explain.max_background},
          {"top", c.explain.top}}},
        {"dm", {{"bandwidth", c.dm_bandwidth ? json(*c.dm_bandwidth) : json(nullptr)}}},
        {"theory",
         {{"regime",
           {{"beta1", vec_json(g.beta1)},
            {"beta2", vec_json(g.beta2)},
            {"pi", g.pi},
            {"sigma_eps", g.sigma_eps},
            {"mean_normal", vec_json(g.mean_normal)},
            {"mean_crisis", vec_json(g.mean_crisis)},
            {"x_sd", g.x_sd},
            {"n", g.n},
            {"seeds", c.theory.regime_seeds}}},
          {"ridge",
           {{"d", vec_json(rc.d)},
            {"alpha", vec_json(rc.alpha)},
            {"sigma2", rc.sigma2},
            {"lambdas", rc.lambdas},
            {"mc_lambda", rc.mc_lambda ? json(*rc.mc_lambda) : json(nullptr)},
            {"mc_reps", rc.mc_reps},
            {"mc_rows", rc.mc_rows}}}}},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
    };
}

void validate_against_master(const RunConfig& cfg, const MasterData& master) {
    std::vector<std::string> missing;
    for (const auto& n : master.monthly.names()) {
        if (!cfg.transforms.kinds().count(n)) missing.push_back(n);
    }
    if (!missing.empty()) {
        std::string msg = "config: no transform declared for indicator(s)";
        for (const auto& m : missing) msg += " " + m;
        throw std::invalid_argument(msg);
    }
}

}  // namespace disagg
