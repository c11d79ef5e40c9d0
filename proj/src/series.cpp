#include "disagg/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_set>

namespace disagg {

namespace {

long periods_per_year(Frequency f) { return f == Frequency::Monthly ? 12 : 4; }

long floor_div(long a, long b) {
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::string to_string(Frequency f) { return f == Frequency::Monthly ? "monthly" : "quarterly"; }

Period::Period(Frequency freq, int year, int sub) : freq_(freq) {
    if (sub < 1 || sub > periods_per_year(freq)) {
        throw std::invalid_argument("period sub-index out of range: " + std::to_string(sub));
    }
    ordinal_ = periods_per_year(freq) * static_cast<long>(year) + (sub - 1);
}

Period Period::from_ordinal(Frequency freq, long ordinal) {
    Period p;
    p.freq_ = freq;
    p.ordinal_ = ordinal;
    return p;
}

int Period::year() const { return static_cast<int>(floor_div(ordinal_, periods_per_year(freq_))); }

int Period::sub() const {
    long n = periods_per_year(freq_);
    return static_cast<int>(ordinal_ - n * floor_div(ordinal_, n)) + 1;
}

long Period::operator-(const Period& other) const {
    if (freq_ != other.freq_) throw std::invalid_argument("period frequency mismatch");
    return ordinal_ - other.ordinal_;
}

Period Period::to_quarter() const {
    if (freq_ == Frequency::Quarterly) return *this;
    return Period::quarter(year(), quarter_of_month(sub()));
}

Period Period::quarter_end_month() const {
    if (freq_ == Frequency::Monthly) return *this;
    return Period::month(year(), 3 * sub());
}

std::string Period::to_string() const {
    char buf[32];
    if (freq_ == Frequency::Monthly) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-01", year(), sub());
    } else {
        std::snprintf(buf, sizeof buf, "%04dQ%d", year(), sub());
    }
    return buf;
}

Series::Series(Period start, std::vector<double> values, std::string name)
    : start_(start), values_(std::move(values)), name_(std::move(name)) {}

Eigen::VectorXd Series::vector() const {
    return Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

Series Series::slice(std::size_t first, std::size_t count) const {
    if (first + count > values_.size()) throw std::out_of_range("series slice out of range");
    return Series(period(first),
                  std::vector<double>(values_.begin() + static_cast<long>(first),
                                      values_.begin() + static_cast<long>(first + count)),
                  name_);
}

long Series::index_of(Period p) const {
    if (p.frequency() != frequency()) return -1;
    long i = p - start_;
    return (i >= 0 && i < static_cast<long>(values_.size())) ? i : -1;
}

Panel::Panel(Period start, std::vector<std::string> names, Eigen::MatrixXd data)
    : start_(start), names_(std::move(names)), data_(std::move(data)) {
    if (static_cast<std::size_t>(data_.cols()) != names_.size()) {
        throw std::invalid_argument("panel column count does not match names");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) throw std::invalid_argument("duplicate panel column: " + n);
    }
}

long Panel::column_index(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? -1 : static_cast<long>(it - names_.begin());
}

Series Panel::column(const std::string& name) const {
    long j = column_index(name);
    if (j < 0) throw std::invalid_argument("no such column: " + name);
    return column(static_cast<std::size_t>(j));
}

Series Panel::column(std::size_t j) const {
    Eigen::VectorXd c = data_.col(static_cast<Eigen::Index>(j));
    return Series(start_, std::vector<double>(c.data(), c.data() + c.size()), names_[j]);
}

Panel Panel::slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows()) throw std::out_of_range("panel slice out of range");
    return Panel(period(first), names_,
                 data_.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)));
}

Panel Panel::select(const std::vector<std::string>& names) const {
    Eigen::MatrixXd out(data_.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t k = 0; k < names.size(); ++k) {
        long j = column_index(names[k]);
        if (j < 0) throw std::invalid_argument("no such column: " + names[k]);
        out.col(static_cast<Eigen::Index>(k)) = data_.col(j);
    }
    return Panel(start_, names, std::move(out));
}

Panel Panel::between(Period from, Period to) const {
    long a = index_of(from);
    long b = index_of(to);
    if (a < 0 || b < 0 || b < a) throw std::out_of_range("panel range outside index");
    return slice_rows(static_cast<std::size_t>(a), static_cast<std::size_t>(b - a + 1));
}

long Panel::index_of(Period p) const {
    if (p.frequency() != frequency()) return -1;
    long i = p - start_;
    return (i >= 0 && i < static_cast<long>(rows())) ? i : -1;
}

std::string lag_name(const std::string& name, int j) { return name + "_lag" + std::to_string(j); }

std::string base_column_name(const std::string& name) {
    auto pos = name.rfind("_lag");
    if (pos == std::string::npos || pos + 4 == name.size()) return name;
    for (std::size_t i = pos + 4; i < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') return name;
    }
    return name.substr(0, pos);
}

Panel add_lags_strided(const Panel& panel, const LagSpec& spec, int stride) {
    if (spec.lag_count < 0) throw std::invalid_argument("lag_count must be non-negative");
    if (stride < 1) throw std::invalid_argument("lag stride must be positive");
    if (spec.lag_count == 0) return panel;
    const long drop = static_cast<long>(spec.lag_count) * stride;
    const long n = static_cast<long>(panel.rows());
    if (drop >= n) throw std::invalid_argument("insufficient history for " + std::to_string(spec.lag_count) + " lags");
    const long k = static_cast<long>(panel.cols());
    const long out_rows = n - drop;
    Eigen::MatrixXd out(out_rows, k * (spec.lag_count + 1));
    std::vector<std::string> names = panel.names();
    out.leftCols(k) = panel.data().bottomRows(out_rows);
    for (int j = 1; j <= spec.lag_count; ++j) {
        out.middleCols(k * j, k) = panel.data().middleRows(drop - static_cast<long>(j) * stride, out_rows);
        for (const auto& nm : panel.names()) names.push_back(lag_name(nm, j));
    }
    return Panel(panel.start() + drop, std::move(names), std::move(out));
}

Panel add_lags(const Panel& panel, const LagSpec& spec) { return add_lags_strided(panel, spec, 1); }

std::size_t train_size(std::size_t n, double ratio) {
    return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-12));
}

TrainTest split_train_test(const Panel& panel, const Series& target, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must lie in (0, 1)");
    if (panel.rows() != target.size() || panel.start() != target.start()) {
        throw std::invalid_argument("panel and target are not aligned");
    }
    const std::size_t n = panel.rows();
    const std::size_t n_train = train_size(n, ratio);
    if (n_train == 0 || n_train >= n) throw std::invalid_argument("split leaves an empty side");
    return {panel.slice_rows(0, n_train), target.slice(0, n_train), panel.slice_rows(n_train, n - n_train),
            target.slice(n_train, n - n_train)};
}

std::pair<Panel, Series> align(const Panel& panel, const Series& target) {
    if (panel.frequency() != target.frequency()) throw std::invalid_argument("cannot align different frequencies");
    Period from = std::max(panel.start(), target.start());
    Period to = std::min(panel.end(), target.end());
    if (to < from) throw std::invalid_argument("panel and target do not overlap");
    auto first = static_cast<std::size_t>(target.index_of(from));
    return {panel.between(from, to), target.slice(first, static_cast<std::size_t>(to - from + 1))};
}

}  // namespace disagg
