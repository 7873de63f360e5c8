#include "nigam/csv.hpp"

#include "nigam/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace nigam::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

Table Table::read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

Table Table::parse(std::string_view text, std::string source_name) {
    Table t;
    t.source_ = std::move(source_name);

    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;

    auto end_field = [&] {
        record.emplace_back(in_quotes ? field : std::string(trim(field)));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        bool blank = record.size() == 1 && record[0].empty();
        if (!blank) {
            if (t.header_.empty()) {
                for (auto& h : record) h = std::string(trim(h));
                t.header_ = std::move(record);
            } else {
                if (record.size() != t.header_.size()) {
                    std::ostringstream msg;
                    msg << t.source_ << ":" << record_line << ":" << record.size()
                        << ": expected " << t.header_.size() << " fields, found " << record.size();
                    throw InputError(msg.str());
                }
                t.rows_.push_back(std::move(record));
                t.lines_.push_back(record_line);
            }
        }
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field_started || trim(field).empty()) {
                field.clear();
                in_quotes = true;
                field_started = true;
            } else {
                field.push_back(c);
            }
            break;
        case ',':
            end_field();
            break;
        case '\n':
            end_record();
            ++line;
            record_line = line;
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        std::ostringstream msg;
        msg << t.source_ << ":" << record_line << ":" << record.size() + 1 << ": unterminated quote";
        throw InputError(msg.str());
    }
    if (!field.empty() || !record.empty()) end_record();
    return t;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return i;
    return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw InputError(source_ + ":1: missing required column '" + std::string(name) + "'");
}

void Table::fail(std::size_t row, std::size_t col, const std::string& what) const {
    std::ostringstream msg;
    msg << source_ << ":" << lines_[row] << ":" << col + 1 << ": " << what;
    throw InputError(msg.str());
}

double Table::number(std::size_t row, std::size_t col) const {
    auto v = optional_number(row, col);
    if (!v) fail(row, col, "missing value in column '" + header_[col] + "'");
    return *v;
}

std::optional<double> Table::optional_number(std::size_t row, std::size_t col) const {
    std::string_view s = trim(rows_[row][col]);
    if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(row, col, "malformed number '" + rows_[row][col] + "' in column '" + header_[col] + "'");
    return v;
}

long long Table::integer(std::size_t row, std::size_t col) const {
    double v = number(row, col);
    if (v != std::floor(v)) fail(row, col, "expected an integer in column '" + header_[col] + "'");
    return static_cast<long long>(v);
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) return "nan";
    return std::string(buf.data(), ptr);
}

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << quote(fields[i]);
    }
    out << '\n';
}

} // namespace nigam::csv
