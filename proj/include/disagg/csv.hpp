#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace disagg {

struct CsvTable {
    std::vector<std::string> header;
    /// Each row has header.size() cells. line[i] is the 1-based file line of rows[i].
    std::vector<std::vector<std::string>> rows;
    std::vector<long> line;

    /// Index of `name` in the header, or -1.
    long column(const std::string& name) const;
};

/// RFC 4180-style reader (quoted fields, doubled quotes, CRLF tolerated). Ragged rows are an
/// error naming the line.
CsvTable parse_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv(const std::string& path);

/// Shortest decimal that parses back to the same double; empty for NaN.
std::string format_double(double v);

/// Parses a numeric cell; throws std::invalid_argument naming `where` on failure.
double parse_double(const std::string& cell, const std::string& where);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& row(std::vector<std::string> cells);
    std::string str() const;
    /// Writes to a temporary file, then renames it into place.
    void save(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace disagg
