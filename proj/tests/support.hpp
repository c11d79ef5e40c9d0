#pragma once

#include "disagg/series.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

inline Eigen::MatrixXd gaussian_matrix(long rows, long cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

inline Eigen::VectorXd gaussian_vector(long n, std::mt19937_64& rng) { return gaussian_matrix(n, 1, rng).col(0); }

inline std::vector<std::string> names(long k, const std::string& prefix = "x") {
    std::vector<std::string> out;
    for (long j = 0; j < k; ++j) out.push_back(prefix + std::to_string(j));
    return out;
}

inline disagg::Panel quarterly_panel(const Eigen::MatrixXd& x, int year = 1990) {
    return {disagg::Period::quarter(year, 1), names(x.cols()), x};
}

inline disagg::Series quarterly_series(const Eigen::VectorXd& y, int year = 1990) {
    return {disagg::Period::quarter(year, 1), std::vector<double>(y.data(), y.data() + y.size())};
}

// Fifteen indicators loading on one AR(1) factor plus AR(1) noise, with `lags` quarterly
// lags, and y linear in five of the resulting columns.
struct FactorDesign {
    disagg::Panel x;
    disagg::Series y;
    Eigen::VectorXd beta;
};

inline FactorDesign factor_design(std::uint64_t seed, long n = 130, long k = 15, int lags = 2, double noise = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const long rows = n + lags;
    Eigen::MatrixXd ind(rows, k);
    double f = 0.0;
    std::vector<double> e(static_cast<std::size_t>(k), 0.0);
    for (long t = 0; t < rows; ++t) {
        f = 0.5 * f + g(rng);
        for (long j = 0; j < k; ++j) {
            auto& ej = e[static_cast<std::size_t>(j)];
            ej = 0.3 * ej + g(rng);
            ind(t, j) = 0.7 * f + 0.7 * ej;
        }
    }
    FactorDesign d;
    d.x = disagg::add_lags(quarterly_panel(ind), disagg::LagSpec{lags});
    const long p = static_cast<long>(d.x.cols());
    d.beta = Eigen::VectorXd::Zero(p);
    const long idx[] = {0, 3, 7, 15, 31};
    const double val[] = {1.0, -0.5, 0.5, 0.4, -0.3};
    for (int i = 0; i < 5; ++i)
        if (idx[i] < p) d.beta(idx[i]) = val[i];
    std::vector<double> y(static_cast<std::size_t>(n));
    for (long t = 0; t < n; ++t) y[static_cast<std::size_t>(t)] = 0.2 + d.x.data().row(t).dot(d.beta) + noise * g(rng);
    d.y = disagg::Series(d.x.start(), y);
    return d;
}

// Writes a synthetic monthly master file: `indicators` columns, GDP at quarter-end months.
inline void write_master(const std::string& path, int months, int indicators, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::ofstream out(path);
    out << "DATE,GDP";
    for (int j = 0; j < indicators; ++j) out << ",ind" << j;
    out << "\n";
    std::vector<double> level(static_cast<std::size_t>(indicators), 100.0);
    double log_gdp = std::log(1000.0);
    double acc = 0.0;
    for (int m = 0; m < months; ++m) {
        const disagg::Period p = disagg::Period::month(2000, 1) + m;
        double common = 0.003 + 0.01 * g(rng);
        for (auto& l : level) l *= std::exp(common + 0.005 * g(rng));
        acc += common;
        out << p.to_string() << ",";
        if (p.sub() % 3 == 0) {
            log_gdp += 0.5 * acc + 0.002 * g(rng);
            acc = 0.0;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", std::exp(log_gdp));
            out << buf;
        }
        for (double l : level) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", l);
            out << "," << buf;
        }
        out << "\n";
    }
}

// Fresh directory under the system temp dir.
inline std::string temp_dir(const std::string& tag) {
    const auto p = std::filesystem::temp_directory_path() / ("disagg_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

}  // namespace testing_support
