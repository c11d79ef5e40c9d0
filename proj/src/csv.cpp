#include "disagg/csv.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace disagg {

long CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<long>(i);
    }
    return -1;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Reads one record, which may span lines inside quotes. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& cells, long& line, const std::string& source) {
    cells.clear();
    std::string cell;
    bool in_quotes = false, any = false, quoted = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    cell.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                cell.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            quoted = true;
        } else if (c == ',') {
            cells.push_back(quoted ? cell : trim(cell));
            cell.clear();
            quoted = false;
        } else if (c == '\n') {
            ++line;
            break;
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    if (in_quotes) throw std::invalid_argument(source + ": unterminated quote near line " + std::to_string(line));
    if (!any) return false;
    cells.push_back(quoted ? cell : trim(cell));
    return true;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
    CsvTable t;
    long line = 1;
    std::vector<std::string> cells;
    if (!read_record(in, t.header, line, source) || (t.header.size() == 1 && t.header[0].empty())) {
        throw std::invalid_argument(source + ": empty file");
    }
    if (!t.header.empty() && t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) t.header[0].erase(0, 3);
    for (long start = line; read_record(in, cells, line, source); start = line) {
        if (cells.size() == 1 && cells[0].empty()) continue;
        if (cells.size() != t.header.size()) {
            throw std::invalid_argument(source + ": line " + std::to_string(start) + " has " +
                                        std::to_string(cells.size()) + " fields, expected " +
                                        std::to_string(t.header.size()));
        }
        t.rows.push_back(cells);
        t.line.push_back(start);
    }
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return parse_csv(in, path);
}

std::string format_double(double v) {
    if (std::isnan(v)) return {};
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& where) {
    double v = 0.0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    if (b != e && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    if (cell.empty() || res.ec != std::errc() || res.ptr != e) {
        throw std::invalid_argument(where + ": non-numeric value '" + cell + "'");
    }
    return v;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

CsvWriter& CsvWriter::row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::invalid_argument("CSV row width differs from header");
    rows_.push_back(std::move(cells));
    return *this;
}

std::string CsvWriter::str() const {
    std::ostringstream out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            const auto& c = cells[i];
            if (c.find_first_of(",\"\n") != std::string::npos) {
                out << '"';
                for (char ch : c) out << (ch == '"' ? "\"\"" : std::string(1, ch));
                out << '"';
            } else {
                out << c;
            }
        }
        out << '\n';
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out.str();
}

void CsvWriter::save(const std::string& path) const {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::filesystem::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << str();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

}  // namespace disagg
