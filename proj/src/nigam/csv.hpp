#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nigam::csv {

// A parsed CSV table with a header row. Quoted fields ("a, b") and doubled
// quotes inside them are supported; line numbers are 1-based file lines.
class Table {
public:
    static Table read_file(const std::string& path);
    static Table parse(std::string_view text, std::string source_name);

    const std::string& source() const { return source_; }
    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

    std::optional<std::size_t> column(std::string_view name) const;
    // Throws InputError if the column is missing.
    std::size_t require_column(std::string_view name) const;

    const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
    std::size_t line_of(std::size_t row) const { return lines_[row]; }

    double number(std::size_t row, std::size_t col) const;
    std::optional<double> optional_number(std::size_t row, std::size_t col) const;
    long long integer(std::size_t row, std::size_t col) const;

private:
    [[noreturn]] void fail(std::size_t row, std::size_t col, const std::string& what) const;

    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::size_t> lines_;
};

// Shortest round-trip decimal representation, independent of the C locale.
std::string format_double(double value);

// Quotes a field when it contains separators, quotes or newlines.
std::string quote(std::string_view field);

// Writes one CSV record terminated by '\n'.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

} // namespace nigam::csv
