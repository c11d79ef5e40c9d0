#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace disagg {

enum class Frequency { Monthly, Quarterly };

std::string to_string(Frequency f);

/// A calendar month or quarter, stored as an ordinal count from year 0.
/// Monthly ordinal = 12*year + (month-1); quarterly ordinal = 4*year + (quarter-1).
class Period {
public:
    Period() = default;
    Period(Frequency freq, int year, int sub);

    static Period from_ordinal(Frequency freq, long ordinal);
    static Period month(int year, int month) { return {Frequency::Monthly, year, month}; }
    static Period quarter(int year, int quarter) { return {Frequency::Quarterly, year, quarter}; }

    Frequency frequency() const { return freq_; }
    long ordinal() const { return ordinal_; }
    int year() const;
    /// Month (1..12) or quarter (1..4).
    int sub() const;

    Period operator+(long n) const { return from_ordinal(freq_, ordinal_ + n); }
    Period operator-(long n) const { return from_ordinal(freq_, ordinal_ - n); }
    long operator-(const Period& other) const;
    auto operator<=>(const Period& other) const = default;

    /// Quarter containing a month (identity for quarterly periods).
    Period to_quarter() const;
    /// Last month of a quarter (identity for monthly periods).
    Period quarter_end_month() const;
    /// "yyyy-mm-01" for months, "yyyyQn" for quarters.
    std::string to_string() const;

private:
    Frequency freq_ = Frequency::Monthly;
    long ordinal_ = 0;
};

/// Quarter of a 1-based month: ceil(m/3).
constexpr int quarter_of_month(int month) { return (month + 2) / 3; }

/// Contiguous univariate series. Missing values are NaN.
class Series {
public:
    Series() = default;
    Series(Period start, std::vector<double> values, std::string name = {});

    Frequency frequency() const { return start_.frequency(); }
    Period start() const { return start_; }
    Period end() const { return start_ + static_cast<long>(values_.size()) - 1; }
    Period period(std::size_t i) const { return start_ + static_cast<long>(i); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::string& name() const { return name_; }

    Eigen::VectorXd vector() const;
    /// Rows [first, first+count).
    Series slice(std::size_t first, std::size_t count) const;
    /// Index of `p`, or -1 when outside the series.
    long index_of(Period p) const;

private:
    Period start_;
    std::vector<double> values_;
    std::string name_;
};

/// Contiguous multivariate observations sharing one index.
class Panel {
public:
    Panel() = default;
    Panel(Period start, std::vector<std::string> names, Eigen::MatrixXd data);

    Frequency frequency() const { return start_.frequency(); }
    Period start() const { return start_; }
    Period end() const { return start_ + static_cast<long>(rows()) - 1; }
    Period period(std::size_t i) const { return start_ + static_cast<long>(i); }
    std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(data_.cols()); }
    const std::vector<std::string>& names() const { return names_; }
    const Eigen::MatrixXd& data() const { return data_; }

    /// Column position by name, or -1.
    long column_index(const std::string& name) const;
    Series column(const std::string& name) const;
    Series column(std::size_t j) const;

    Panel slice_rows(std::size_t first, std::size_t count) const;
    Panel select(const std::vector<std::string>& names) const;
    /// Restricts to the periods [from, to] (inclusive), which must lie within the panel.
    Panel between(Period from, Period to) const;
    long index_of(Period p) const;

private:
    Period start_;
    std::vector<std::string> names_;
    Eigen::MatrixXd data_;
};

struct LagSpec {
    int lag_count = 0;
};

/// Name of the j-th lag of column `name`.
std::string lag_name(const std::string& name, int j);
/// Strips a trailing "_lag<j>" suffix, if present.
std::string base_column_name(const std::string& name);

/// Appends `lag_count` lags of every column (at the panel's own frequency) and drops the
/// first `lag_count` rows. Column order: all originals, then all lag-1 columns, then lag-2...
Panel add_lags(const Panel& panel, const LagSpec& spec);

/// Same as add_lags but with the lag measured in `stride` rows (a quarterly lag on a monthly
/// panel uses stride 3).
Panel add_lags_strided(const Panel& panel, const LagSpec& spec, int stride);

struct TrainTest {
    Panel train_x;
    Series train_y;
    Panel test_x;
    Series test_y;
};

/// Number of training rows for a split of `n` rows at `ratio`: ceil(ratio*n).
std::size_t train_size(std::size_t n, double ratio);

/// First ceil(ratio*N) rows train, the rest test. Panel and target must share an index.
TrainTest split_train_test(const Panel& panel, const Series& target, double ratio);

/// Restricts a panel and a series to their common periods.
std::pair<Panel, Series> align(const Panel& panel, const Series& target);

}  // namespace disagg
