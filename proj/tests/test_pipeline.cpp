#include "disagg/config.hpp"
#include "disagg/csv.hpp"
#include "disagg/hash.hpp"
#include "disagg/log.hpp"
#include "disagg/pipeline.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace disagg;
namespace fs = std::filesystem;

namespace {

struct QuietLog {
    log::Sink old = log::set_sink([](const std::string&) {});
    ~QuietLog() { log::set_sink(old); }
};

nlohmann::json small_config(const std::string& dir) {
    nlohmann::json transforms;
    for (int j = 0; j < 4; ++j) transforms["ind" + std::to_string(j)] = j == 3 ? "level" : "log_diff";
    return {{"version", 1},
            {"country", "syn"},
            {"master_file", "master_{country}.csv"},
            {"transforms", transforms},
            {"lags", {0, 1}},
            {"regressors",
             {{{"kind", "chow_lin"}},
              {{"kind", "elastic_net"}, {"l1_ratios", {0.5, 1.0}}, {"n_alphas", 15}, {"folds", 3}},
              {{"kind", "gradient_boost"},
               {"max_depth", {2}},
               {"learning_rate", {0.1}},
               {"trees", {20}},
               {"subsample", {0.85}},
               {"leaf_l2", {1.0}},
               {"min_child_weight", {1.0}},
               {"folds", 3}},
              {{"kind", "feedforward"}, {"trials", 2}, {"max_epochs", 60}, {"patience", 10}}}},
            {"bootstrap_replications", 20},
            {"explain", {{"mode", "auto"}, {"permutations", 16}, {"max_background", 20}}},
            {"theory",
             {{"regime", {{"n", 2000}, {"seeds", 5}}}, {"ridge", {{"mc_reps", 200}, {"lambdas", {0, 0.5, 1, 1.5}}}}}},
            {"seed", 11},
            {"output_dir", dir + "/out"}};
}

RunConfig setup(const std::string& tag, nlohmann::json* doc_out = nullptr) {
    const std::string dir = testing_support::temp_dir(tag);
    testing_support::write_master(dir + "/master_syn.csv", 150, 4, 5);
    nlohmann::json doc = small_config(dir);
    if (doc_out) *doc_out = doc;
    return config_from_json(doc, dir);
}

std::map<std::string, std::string> output_hashes(const nlohmann::json& manifest) {
    std::map<std::string, std::string> h;
    for (const auto& o : manifest.at("outputs")) h[o.at("file")] = o.at("sha256");
    return h;
}

}  // namespace

TEST(Pipeline, FullRunIsDeterministic) {
    QuietLog quiet;
    const RunConfig cfg = setup("det");
    const PipelineResult a = run_pipeline(cfg, stages_for_command("all"));
    const auto first = output_hashes(a.manifest);
    const PipelineResult b = run_pipeline(cfg, stages_for_command("all"));
    EXPECT_EQ(output_hashes(b.manifest), first);
    EXPECT_EQ(a.manifest.at("run_sha256"), b.manifest.at("run_sha256"));
    EXPECT_EQ(a.manifest.at("status"), "complete");
    EXPECT_EQ(a.cells.size(), 8u);
    for (const char* f : {"summary.csv", "dm.csv", "monthly_elastic_net_lag1.csv", "predictions_chow_lin_lag0.csv",
                          "shap_gradient_boost_lag1.csv", "importance_elastic_net_lag0.csv", "theory_verdicts.txt",
                          "bootstrap_elastic_net_lag0.csv", "adf.csv", "quarterly_design_lag1.csv"}) {
        EXPECT_TRUE(first.count(f)) << f;
        EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / f)) << f;
    }
    // Recorded hashes describe the files on disk.
    for (const auto& [name, hash] : first) EXPECT_EQ(sha256_file(cfg.output_dir + "/" + name), hash) << name;
}

TEST(Pipeline, RunHashTracksConfigSeedAndInput) {
    QuietLog quiet;
    nlohmann::json doc;
    RunConfig cfg = setup("hash", &doc);
    const auto stages = std::vector<Stage>{Stage::Preprocess};
    const std::string base = run_pipeline(cfg, stages).manifest.at("run_sha256");
    EXPECT_EQ(run_pipeline(cfg, stages).manifest.at("run_sha256"), base);
    RunConfig seeded = cfg;
    seeded.seed = 12;
    EXPECT_NE(run_pipeline(seeded, stages).manifest.at("run_sha256"), base);
    RunConfig field = cfg;
    field.adf_max_lag = 3;
    EXPECT_NE(run_pipeline(field, stages).manifest.at("run_sha256"), base);
    std::ofstream(cfg.master_path(), std::ios::app) << "";
    EXPECT_EQ(run_pipeline(cfg, stages).manifest.at("run_sha256"), base);
    testing_support::write_master(cfg.master_path(), 150, 4, 6);
    EXPECT_NE(run_pipeline(cfg, stages).manifest.at("run_sha256"), base);
}

TEST(Pipeline, ReconciliationModesMeetTheirConstraints) {
    QuietLog quiet;
    RunConfig cfg = setup("modes");
    const PreparedData data = prepare_data(cfg);
    RegressorSpec spec = cfg.regressors[1];
    cfg.bootstrap_replications = 0;
    const Disaggregation ma5 = disaggregate(cfg, data, spec, 1, 3);
    EXPECT_LT(ma5.max_violation_after, 1e-9);
    EXPECT_FALSE(ma5.quarters.empty());
    for (const auto& q : ma5.quarters) EXPECT_NEAR(q.after, q.target, 1e-9);
    for (int m = 0; m < 4; ++m) EXPECT_TRUE(ma5.unconstrained[static_cast<std::size_t>(m)]);

    cfg.reconciliation = ReconcileMode::Denton;
    const Disaggregation den = disaggregate(cfg, data, spec, 1, 3);
    EXPECT_FALSE(den.quarters.empty());
    for (const auto& q : den.quarters) {
        const long a = den.growth.index_of(q.quarter.quarter_end_month() - 2);
        ASSERT_GE(a, 0);
        double sum = 0.0;
        for (long m = a; m < a + 3; ++m) sum += den.growth[static_cast<std::size_t>(m)];
        EXPECT_NEAR(sum, q.target, 1e-12);
    }
    // Same signal in both modes.
    EXPECT_EQ(den.tilde.values(), ma5.tilde.values());
    EXPECT_NE(den.growth.values(), ma5.growth.values());
    // Levels compound the reconciled growth from the first GDP level.
    EXPECT_NEAR(ma5.level[0], data.master.gdp[0] * std::exp(ma5.growth[0]), 1e-9 * ma5.level[0]);
}

TEST(Pipeline, EmittedCsvRoundTrips) {
    QuietLog quiet;
    RunConfig cfg = setup("roundtrip");
    cfg.regressors.resize(2);
    cfg.lags = {1};
    cfg.bootstrap_replications = 0;
    run_pipeline(cfg, stages_for_command("disaggregate"));
    const PreparedData data = prepare_data(cfg);
    const Disaggregation d = disaggregate(cfg, data, cfg.regressors[1], 1, cell_seed(cfg.seed, 1, 1));
    const CsvTable t = read_csv(cfg.output_dir + "/monthly_elastic_net_lag1.csv");
    ASSERT_EQ(t.rows.size(), d.growth.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_EQ(parse_double(t.rows[i][2], "growth"), d.growth[i]);
        EXPECT_EQ(parse_double(t.rows[i][3], "level"), d.level[i]);
    }
}

TEST(Pipeline, LagColumnCounts) {
    QuietLog quiet;
    const std::string dir = testing_support::temp_dir("lags");
    testing_support::write_master(dir + "/master_wide.csv", 120, 15, 2);
    nlohmann::json doc = {{"version", 1}, {"country", "wide"}, {"lags", {1, 2}}};
    for (int j = 0; j < 15; ++j) doc["transforms"]["ind" + std::to_string(j)] = "log_diff";
    const RunConfig cfg = config_from_json(doc, dir);
    const PreparedData data = prepare_data(cfg);
    EXPECT_EQ(quarterly_design(data, 0).x.cols(), 15u);
    EXPECT_EQ(quarterly_design(data, 1).x.cols(), 30u);
    const Design d2 = quarterly_design(data, 2);
    EXPECT_EQ(d2.x.cols(), 45u);
    EXPECT_EQ(d2.x.start(), d2.y.start());
    EXPECT_EQ(d2.x.rows(), d2.y.size());
}

TEST(Pipeline, FailedStageLeavesPartialManifest) {
    QuietLog quiet;
    RunConfig cfg = setup("partial");
    cfg.explain.mode = "exact";
    cfg.lags = {1};
    cfg.regressors.resize(1);
    cfg.transforms = {};
    // Eight indicators at lag 1 give 16 columns, beyond the exact-mode limit.
    testing_support::write_master(cfg.master_path(), 150, 8, 5);
    for (int j = 0; j < 8; ++j) cfg.transforms.set("ind" + std::to_string(j), TransformKind::LogDiff);
    EXPECT_THROW(run_pipeline(cfg, stages_for_command("explain")), std::invalid_argument);
    std::ifstream in(cfg.output_dir + "/manifest.json");
    const nlohmann::json m = nlohmann::json::parse(in);
    EXPECT_EQ(m.at("status"), "failed");
    EXPECT_EQ(m.at("stages_completed"), nlohmann::json::array({"preprocess"}));
    EXPECT_NE(m.at("error").get<std::string>().find("sampled"), std::string::npos);
}

TEST(Pipeline, StandaloneDmReadsPredictions) {
    QuietLog quiet;
    RunConfig cfg = setup("dm");
    cfg.regressors.resize(2);
    cfg.lags = {0};
    run_pipeline(cfg, {Stage::Preprocess, Stage::Evaluate});
    const PipelineResult r = run_pipeline(cfg, stages_for_command("dm"));
    const CsvTable t = read_csv(cfg.output_dir + "/dm.csv");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][2], "chow_lin");
    EXPECT_EQ(t.rows[0][3], "elastic_net");
}

TEST(Pipeline, UnknownCommand) { EXPECT_THROW(stages_for_command("fit"), std::invalid_argument); }

#ifdef DISAGG_CLI_PATH
TEST(Cli, ExitCodes) {
    const std::string dir = testing_support::temp_dir("cli");
    const std::string cli = DISAGG_CLI_PATH;
    auto run = [&](const std::string& args) {
        const int rc = std::system((cli + " " + args + " > " + dir + "/log.txt 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    EXPECT_EQ(run("evaluate"), 1);  // no --config
    EXPECT_EQ(run("bogus"), 1);
    std::ofstream(dir + "/bad.json") << R"({"version": 1, "lagz": [1]})";
    EXPECT_EQ(run("evaluate --config " + dir + "/bad.json"), 1);
    std::ofstream(dir + "/theory.json")
        << R"({"version": 1, "theory": {"regime": {"n": 2000, "seeds": 4}, "ridge": {"mc_reps": 100}}})";
    EXPECT_EQ(run("theory --config " + dir + "/theory.json --out " + dir + "/t --seed 3"), 0);
    std::ifstream m(dir + "/t/manifest.json");
    EXPECT_EQ(nlohmann::json::parse(m).at("seed"), 3);
    // An unwritable output location is a runtime failure.
    EXPECT_EQ(run("theory --config " + dir + "/theory.json --out /proc/disagg_no_such_dir"), 2);
    // --country selects the master file.
    testing_support::write_master(dir + "/master_aa.csv", 60, 2, 1);
    std::ofstream(dir + "/pre.json")
        << R"({"version": 1, "country": "zz", "transforms": {"ind0": "log_diff", "ind1": "log_diff"}})";
    EXPECT_EQ(run("preprocess --config " + dir + "/pre.json --country zz --out " + dir + "/p"), 1);
    EXPECT_EQ(run("preprocess --config " + dir + "/pre.json --country aa --out " + dir + "/p"), 0);
}
#endif
