#include "disagg/master.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace disagg {

std::string to_string(GdpPosition p) { return p == GdpPosition::QuarterEnd ? "quarter_end" : "quarter_start"; }

GdpPosition parse_gdp_position(const std::string& text) {
    if (text == "quarter_end" || text == "end") return GdpPosition::QuarterEnd;
    if (text == "quarter_start" || text == "start") return GdpPosition::QuarterStart;
    throw std::invalid_argument("unknown GDP position '" + text + "' (expected quarter_end or quarter_start)");
}

namespace {

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Period parse_period(const std::string& text) {
    int year = 0, sub = 0, day = 1;
    const std::string_view s(text);
    if (s.size() == 6 && (s[4] == 'Q' || s[4] == 'q') && parse_int(s.substr(0, 4), year) && parse_int(s.substr(5), sub) &&
        sub >= 1 && sub <= 4) {
        return Period::quarter(year, sub);
    }
    const bool ymd = s.size() == 10 && s[4] == '-' && s[7] == '-' && parse_int(s.substr(8, 2), day);
    const bool ym = s.size() == 7 && s[4] == '-';
    if ((ymd || ym) && parse_int(s.substr(0, 4), year) && parse_int(s.substr(5, 2), sub) && sub >= 1 && sub <= 12 &&
        day >= 1 && day <= 31) {
        return Period::month(year, sub);
    }
    throw std::invalid_argument("unparseable date '" + text + "'");
}

MasterData parse_master(const CsvTable& table, const MasterSchema& schema, const std::string& source) {
    const long date_col = table.column(schema.date_column);
    if (date_col < 0) throw std::invalid_argument(source + ": missing " + schema.date_column + " column");
    const long gdp_col = table.column(schema.gdp_column);
    if (gdp_col < 0) throw std::invalid_argument(source + ": missing " + schema.gdp_column + " column");
    {
        std::set<std::string> seen;
        for (const auto& h : table.header) {
            if (!seen.insert(h).second) throw std::invalid_argument(source + ": duplicate column " + h);
        }
    }
    std::vector<std::string> names = schema.indicators;
    if (names.empty()) {
        for (std::size_t j = 0; j < table.header.size(); ++j) {
            if (static_cast<long>(j) != date_col && static_cast<long>(j) != gdp_col) names.push_back(table.header[j]);
        }
    }
    std::vector<long> cols;
    for (const auto& n : names) {
        const long c = table.column(n);
        if (c < 0) throw std::invalid_argument(source + ": missing indicator column " + n);
        cols.push_back(c);
    }
    if (table.rows.empty()) throw std::invalid_argument(source + ": no data rows");

    const long n = static_cast<long>(table.rows.size());
    std::vector<Period> dates;
    for (long i = 0; i < n; ++i) {
        const std::string where = source + " line " + std::to_string(table.line[static_cast<std::size_t>(i)]);
        const std::string& cell = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(date_col)];
        if (cell.empty()) throw std::invalid_argument(where + ": missing DATE");
        Period p;
        try {
            p = parse_period(cell);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
        if (p.frequency() != Frequency::Monthly) throw std::invalid_argument(where + ": DATE is not a month");
        dates.push_back(p);
    }
    // Order violations are reported before duplicates and gaps so a shuffled file says so.
    auto where_row = [&](long i) { return source + " line " + std::to_string(table.line[static_cast<std::size_t>(i)]); };
    for (long i = 1; i < n; ++i) {
        if (dates[static_cast<std::size_t>(i)] < dates[static_cast<std::size_t>(i) - 1]) {
            throw std::invalid_argument(where_row(i) + ": DATE not monotone");
        }
    }
    for (long i = 1; i < n; ++i) {
        const long step = dates[static_cast<std::size_t>(i)] - dates[static_cast<std::size_t>(i) - 1];
        if (step == 0) throw std::invalid_argument(where_row(i) + ": duplicate DATE " + dates[static_cast<std::size_t>(i)].to_string());
        if (step != 1) throw std::invalid_argument(where_row(i) + ": DATE gap before " + dates[static_cast<std::size_t>(i)].to_string());
    }

    Eigen::MatrixXd x(n, static_cast<long>(cols.size()));
    for (long i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        const std::string line = std::to_string(table.line[static_cast<std::size_t>(i)]);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::string where = source + " line " + line + ", column " + names[j];
            const std::string& cell = row[static_cast<std::size_t>(cols[j])];
            if (cell.empty()) throw std::invalid_argument(where + ": missing value");
            x(i, static_cast<long>(j)) = parse_double(cell, where);
        }
    }

    // GDP: one value per quarter at the configured month; blank elsewhere.
    std::vector<Period> quarters;
    std::vector<double> levels;
    for (long i = 0; i < n; ++i) {
        const std::string& cell = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(gdp_col)];
        const Period m = dates[static_cast<std::size_t>(i)];
        const int within = (m.sub() - 1) % 3;
        const bool slot = schema.gdp_position == GdpPosition::QuarterEnd ? within == 2 : within == 0;
        const std::string where = source + " line " + std::to_string(table.line[static_cast<std::size_t>(i)]);
        if (cell.empty()) continue;
        if (!slot) {
            throw std::invalid_argument(where + ": GDP value outside the " + to_string(schema.gdp_position) +
                                        " month of its quarter");
        }
        const double v = parse_double(cell, where + ", column " + schema.gdp_column);
        if (!(v > 0.0)) throw std::invalid_argument(where + ": GDP must be positive");
        const Period q = m.to_quarter();
        if (!quarters.empty() && q - quarters.back() != 1) {
            throw std::invalid_argument(where + ": GDP gap before " + q.to_string());
        }
        quarters.push_back(q);
        levels.push_back(v);
    }
    if (levels.size() < 2) throw std::invalid_argument(source + ": need at least two GDP quarters");
    std::vector<double> growth(levels.size() - 1);
    for (std::size_t i = 1; i < levels.size(); ++i) growth[i - 1] = std::log(levels[i]) - std::log(levels[i - 1]);

    MasterData out;
    out.monthly = Panel(dates.front(), names, std::move(x));
    out.gdp = Series(quarters.front(), std::move(levels), schema.gdp_column);
    out.growth = Series(quarters.front() + 1, std::move(growth), schema.gdp_column);
    return out;
}

MasterData load_master_csv(const std::string& path, const MasterSchema& schema) {
    return parse_master(read_csv(path), schema, path);
}

}  // namespace disagg
