#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace steingrad_cli {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line, const std::string& what)
{
    throw InputError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Table read_csv(const std::string& path, const std::string& prefix)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "' for reading");
    }

    Table table;
    std::string line;
    std::size_t line_no = 0;
    std::size_t blank_run_start = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view content = trim(line);
        if (line_no == 1) {
            if (content.size() >= 3 && static_cast<unsigned char>(content[0]) == 0xEF &&
                static_cast<unsigned char>(content[1]) == 0xBB && static_cast<unsigned char>(content[2]) == 0xBF) {
                parse_error(path, line_no, "byte-order mark is not supported");
            }
            const auto header = split(content);
            for (std::size_t j = 0; j < header.size(); ++j) {
                const std::string expected = prefix + std::to_string(j);
                if (header[j] != expected) {
                    parse_error(path, line_no,
                                "expected header column '" + expected + "', found '" + std::string(header[j]) + "'");
                }
            }
            table.cols = header.size();
            continue;
        }
        if (content.empty()) {
            if (blank_run_start == 0) {
                blank_run_start = line_no;
            }
            continue;
        }
        if (blank_run_start != 0) {
            parse_error(path, blank_run_start, "blank line inside the data");
        }

        const auto fields = split(content);
        if (fields.size() != table.cols) {
            parse_error(path, line_no,
                        "expected " + std::to_string(table.cols) + " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const std::string_view f = fields[j];
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
            if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
                parse_error(path, line_no, "field " + std::to_string(j + 1) + " ('" + std::string(f) +
                                               "') is not a number");
            }
            if (!std::isfinite(value)) {
                parse_error(path, line_no, "field " + std::to_string(j + 1) + " is not finite");
            }
            table.data.push_back(value);
        }
        ++table.rows;
    }

    if (line_no == 0) {
        throw InputError(path + ": file is empty; a header line is required");
    }
    if (table.rows == 0) {
        throw InputError(path + ": no data rows");
    }
    return table;
}

std::string format_double(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) {
        throw std::runtime_error("failed to format a double");
    }
    return std::string(buf, ptr);
}

void write_csv(const std::string& path, const std::string& prefix, const Table& table)
{
    std::ostringstream out;
    for (std::size_t j = 0; j < table.cols; ++j) {
        out << (j == 0 ? "" : ",") << prefix << j;
    }
    out << '\n';
    for (std::size_t i = 0; i < table.rows; ++i) {
        for (std::size_t j = 0; j < table.cols; ++j) {
            out << (j == 0 ? "" : ",") << format_double(table.data[i * table.cols + j]);
        }
        out << '\n';
    }
    write_file(path, out.str());
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot open '" + path + "' for writing");
    }
    out << contents;
    if (!out) {
        throw InputError("failed to write '" + path + "'");
    }
}

}  // namespace steingrad_cli
