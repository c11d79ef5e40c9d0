#pragma once

#include "disagg/csv.hpp"
#include "disagg/series.hpp"

#include <string>
#include <vector>

namespace disagg {

/// Month of the quarter that carries the GDP value.
enum class GdpPosition { QuarterEnd, QuarterStart };

std::string to_string(GdpPosition p);
GdpPosition parse_gdp_position(const std::string& text);

struct MasterSchema {
    std::string date_column = "DATE";
    std::string gdp_column = "GDP";
    GdpPosition gdp_position = GdpPosition::QuarterEnd;
    /// Indicator columns in output order; empty means every other column in file order.
    std::vector<std::string> indicators;
};

struct MasterData {
    Panel monthly;
    /// Quarterly GDP levels.
    Series gdp;
    /// log GDP_q - log GDP_{q-1}.
    Series growth;
};

/// Parses "yyyy-mm-dd" (or "yyyy-mm") to a monthly period; "yyyyQn" to a quarterly one.
Period parse_period(const std::string& text);

MasterData parse_master(const CsvTable& table, const MasterSchema& schema, const std::string& source = "<master>");
MasterData load_master_csv(const std::string& path, const MasterSchema& schema = {});

}  // namespace disagg
