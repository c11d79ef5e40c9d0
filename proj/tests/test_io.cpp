#include "disagg/config.hpp"
#include "disagg/csv.hpp"
#include "disagg/master.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace disagg;

namespace {

CsvTable table(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in, "t.csv");
}

std::string error_of(const std::string& text) {
    try {
        parse_master(table(text), {}, "m.csv");
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Csv, QuotesBomAndBlankLines) {
    const CsvTable t = table("\xEF\xBB\xBF" "a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\n\n3,4\n");
    EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][0], "x,1");
    EXPECT_EQ(t.rows[0][1], "say \"hi\"");
    EXPECT_EQ(t.line[1], 4);
    EXPECT_EQ(t.column("b"), 1);
}

TEST(Csv, RaggedLineNamed) {
    try {
        table("a,b\n1,2\n3\n");
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Csv, ShortestRoundTrip) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 30) - 15);
        EXPECT_EQ(parse_double(format_double(v), "x"), v);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(format_double(std::nan("")), "");
    EXPECT_THROW(parse_double("1.2.3", "row 4"), std::invalid_argument);
    EXPECT_THROW(parse_double("", "row 4"), std::invalid_argument);
}

TEST(Csv, WriterRoundTrip) {
    CsvWriter w({"name", "value"});
    w.row({"a,b", format_double(1.0 / 3.0)});
    w.row({"q\"x", format_double(-2.5e-300)});
    const CsvTable t = table(w.str());
    EXPECT_EQ(t.rows[0][0], "a,b");
    EXPECT_EQ(t.rows[1][0], "q\"x");
    EXPECT_EQ(parse_double(t.rows[0][1], ""), 1.0 / 3.0);
    EXPECT_EQ(parse_double(t.rows[1][1], ""), -2.5e-300);
    const std::string dir = testing_support::temp_dir("csvw");
    w.save(dir + "/out.csv");
    EXPECT_EQ(read_csv(dir + "/out.csv").rows, t.rows);
    EXPECT_THROW(w.row({"only one"}), std::invalid_argument);
}

TEST(Master, SixMonthExample) {
    const MasterData d = parse_master(table("DATE,GDP,ip\n"
                                            "2000-01-01,,1\n2000-02-01,,2\n2000-03-01,100,3\n"
                                            "2000-04-01,,4\n2000-05-01,,5\n2000-06-01,110,6\n"),
                                      {}, "m.csv");
    ASSERT_EQ(d.growth.size(), 1u);
    EXPECT_NEAR(d.growth[0], std::log(110.0) - std::log(100.0), 1e-15);
    EXPECT_EQ(d.growth.start(), Period::quarter(2000, 2));
    EXPECT_EQ(d.monthly.rows(), 6u);
    EXPECT_EQ(d.monthly.names(), (std::vector<std::string>{"ip"}));
}

TEST(Master, QuarterStartPosition) {
    MasterSchema s;
    s.gdp_position = GdpPosition::QuarterStart;
    const MasterData d = parse_master(table("DATE,GDP,ip\n2000-01-01,100,1\n2000-02-01,,2\n2000-03-01,,3\n"
                                            "2000-04-01,105,4\n2000-05-01,,5\n2000-06-01,,6\n"),
                                      s);
    EXPECT_EQ(d.gdp.start(), Period::quarter(2000, 1));
    EXPECT_NEAR(d.growth[0], std::log(1.05), 1e-15);
}

TEST(Master, StructuredErrors) {
    const std::string head = "DATE,GDP,ip\n";
    EXPECT_NE(error_of(head + "2000-02-01,,1\n2000-01-01,,2\n2000-03-01,1,3\n").find("DATE not monotone"),
              std::string::npos);
    EXPECT_NE(error_of(head + "2000-01-01,,1\n2000-01-01,,2\n").find("line 3: duplicate DATE"), std::string::npos);
    EXPECT_NE(error_of(head + "2000-01-01,,1\n2000-03-01,,2\n").find("DATE gap"), std::string::npos);
    EXPECT_NE(error_of(head + "2000-01-01,,x\n").find("line 2"), std::string::npos);
    EXPECT_NE(error_of(head + ",,1\n").find("missing DATE"), std::string::npos);
    EXPECT_NE(error_of("GDP,ip\n1,2\n").find("missing DATE column"), std::string::npos);
    EXPECT_NE(error_of(head + "2000-01-01,,1\n2000-02-01,,1\n2000-03-01,10,1\n2000-04-01,,1\n2000-05-01,,1\n"
                              "2000-06-01,,1\n2000-07-01,,1\n2000-08-01,,1\n2000-09-01,12,1\n")
                  .find("GDP gap"),
              std::string::npos);
    EXPECT_NE(error_of(head + "2000-01-01,5,1\n").find("outside"), std::string::npos);
}

TEST(Master, Periods) {
    EXPECT_EQ(parse_period("1999-12-01"), Period::month(1999, 12));
    EXPECT_EQ(parse_period("1999-07"), Period::month(1999, 7));
    EXPECT_EQ(parse_period("1999Q3"), Period::quarter(1999, 3));
    EXPECT_THROW(parse_period("12/1999"), std::invalid_argument);
}

TEST(Config, DefaultsAndStrictKeys) {
    const RunConfig c = config_from_json({{"version", 1}});
    EXPECT_EQ(c.regressors.size(), 4u);
    EXPECT_EQ(c.lags, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(c.reconciliation, ReconcileMode::Ma5);
    EXPECT_THROW(config_from_json({{"version", 1}, {"lagz", {1}}}), std::invalid_argument);
    EXPECT_THROW(config_from_json({{"country", "us"}}), std::invalid_argument);
    EXPECT_THROW(config_from_json({{"version", 2}}), std::invalid_argument);
    EXPECT_THROW(config_from_json({{"version", 1}, {"reconciliation", "chow"}}), std::invalid_argument);
    EXPECT_THROW(config_from_json({{"version", 1}, {"regressors", {{{"kind", "elastic_net"}, {"alpha", 1}}}}}),
                 std::invalid_argument);
}

TEST(Config, CanonicalRoundTrip) {
    const nlohmann::json doc = {{"version", 1},
                                {"country", "de"},
                                {"master_file", "data/master_{country}.csv"},
                                {"transforms", {{"ip", "log_diff"}, {"rate", "diff"}}},
                                {"lags", {1}},
                                {"regressors", {{{"kind", "elastic_net"}, {"folds", 3}}, {{"kind", "chow_lin"}}}},
                                {"window", {{"initial_window", 20}}},
                                {"reconciliation", "denton"},
                                {"seed", 99}};
    const RunConfig c = config_from_json(doc, "/base");
    EXPECT_EQ(c.master_path(), "/base/data/master_de.csv");
    EXPECT_EQ(c.regressors[0].elastic_net.folds, 3);
    EXPECT_EQ(*c.window.initial_window, 20u);
    const nlohmann::json canon = config_to_json(c);
    const RunConfig back = config_from_json(canon, "/base");
    EXPECT_EQ(config_to_json(back), canon);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.reconciliation, ReconcileMode::Denton);
}

TEST(Config, EveryIndicatorNeedsATransform) {
    const MasterData d = parse_master(table("DATE,GDP,ip,rate\n2000-01-01,,1,1\n2000-02-01,,2,1\n2000-03-01,100,3,1\n"
                                            "2000-04-01,,4,1\n2000-05-01,,5,1\n2000-06-01,110,6,1\n"),
                                      {});
    RunConfig c = config_from_json({{"version", 1}, {"transforms", {{"ip", "log_diff"}}}});
    EXPECT_THROW(validate_against_master(c, d), std::invalid_argument);
    c.transforms.set("rate", TransformKind::Diff);
    EXPECT_NO_THROW(validate_against_master(c, d));
}
