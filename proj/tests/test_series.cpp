#include "disagg/series.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace disagg;

TEST(Period, OrdinalsAndCalendar) {
    const Period m = Period::month(2001, 11);
    EXPECT_EQ(m.ordinal(), 2001 * 12 + 10);
    EXPECT_EQ((m + 3).year(), 2002);
    EXPECT_EQ((m + 3).sub(), 2);
    EXPECT_EQ(m.to_quarter(), Period::quarter(2001, 4));
    EXPECT_EQ(Period::quarter(2001, 2).quarter_end_month(), Period::month(2001, 6));
    EXPECT_EQ(Period::month(2002, 1) - m, 2);
    EXPECT_EQ(m.to_string(), "2001-11-01");
    EXPECT_EQ(Period::quarter(1999, 3).to_string(), "1999Q3");
    EXPECT_EQ(quarter_of_month(3), 1);
    EXPECT_EQ(quarter_of_month(4), 2);
    EXPECT_THROW(Period::month(2000, 13), std::invalid_argument);
}

TEST(Series, SliceAndIndex) {
    const Series s(Period::quarter(2000, 1), {1, 2, 3, 4});
    EXPECT_EQ(s.end(), Period::quarter(2000, 4));
    EXPECT_EQ(s.index_of(Period::quarter(2000, 3)), 2);
    EXPECT_EQ(s.index_of(Period::quarter(2001, 1)), -1);
    const Series t = s.slice(1, 2);
    EXPECT_EQ(t.start(), Period::quarter(2000, 2));
    EXPECT_EQ(t.values(), (std::vector<double>{2, 3}));
}

TEST(Lags, ColumnArithmetic) {
    Eigen::MatrixXd m(10, 15);
    for (long i = 0; i < 10; ++i)
        for (long j = 0; j < 15; ++j) m(i, j) = 100 * i + j;
    const Panel p = testing_support::quarterly_panel(m);
    EXPECT_EQ(add_lags(p, {0}).cols(), 15u);
    EXPECT_EQ(add_lags(p, {1}).cols(), 30u);
    const Panel l2 = add_lags(p, {2});
    EXPECT_EQ(l2.cols(), 45u);
    EXPECT_EQ(l2.rows(), 8u);
    EXPECT_EQ(l2.start(), p.period(2));
    EXPECT_EQ(l2.names()[15], lag_name("x0", 1));
    EXPECT_EQ(base_column_name(l2.names()[44]), "x14");
    // Row 0 of the lagged panel is period 2: lag 1 holds period 1, lag 2 period 0.
    EXPECT_EQ(l2.data()(0, 0), 200.0);
    EXPECT_EQ(l2.data()(0, 15), 100.0);
    EXPECT_EQ(l2.data()(0, 30), 0.0);
}

TEST(Lags, StridedOnMonthly) {
    Eigen::MatrixXd m(9, 1);
    for (long i = 0; i < 9; ++i) m(i, 0) = i;
    const Panel p(Period::month(2000, 1), {"a"}, m);
    const Panel l = add_lags_strided(p, {2}, 3);
    EXPECT_EQ(l.rows(), 3u);
    EXPECT_EQ(l.start(), Period::month(2000, 7));
    EXPECT_EQ(l.data()(0, 1), 3.0);
    EXPECT_EQ(l.data()(0, 2), 0.0);
}

TEST(Split, CeilTrainSize) {
    EXPECT_EQ(train_size(10, 0.5), 5u);
    EXPECT_EQ(train_size(11, 0.5), 6u);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(10, 1);
    const TrainTest tt = split_train_test(testing_support::quarterly_panel(m),
                                          Series(Period::quarter(1990, 1), std::vector<double>(10, 0.0)), 0.5);
    EXPECT_EQ(tt.train_x.rows(), 5u);
    EXPECT_EQ(tt.test_y.start(), Period::quarter(1991, 2));
}

TEST(Align, CommonPeriods) {
    const Panel p = testing_support::quarterly_panel(Eigen::MatrixXd::Zero(8, 2));
    const Series s(Period::quarter(1990, 3), std::vector<double>(10, 1.0));
    const auto [x, y] = align(p, s);
    EXPECT_EQ(x.rows(), 6u);
    EXPECT_EQ(y.size(), 6u);
    EXPECT_EQ(x.start(), y.start());
}

TEST(Panel, SelectAndBetween) {
    const Panel p = testing_support::quarterly_panel(Eigen::MatrixXd::Random(6, 3));
    EXPECT_EQ(p.select({"x2"}).data().col(0), p.data().col(2));
    EXPECT_EQ(p.column_index("nope"), -1);
    EXPECT_EQ(p.between(p.period(1), p.period(3)).rows(), 3u);
}
