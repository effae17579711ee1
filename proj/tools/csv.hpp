#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace steingrad_cli {

// Bad user input: malformed files, unknown options, missing values.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Row-major numeric table.
struct Table {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
};

// Reads a comma-separated file whose mandatory header is
// <prefix>0,<prefix>1,...; every data row must have the same width and
// finite entries. Errors name the offending line.
[[nodiscard]] Table read_csv(const std::string& path, const std::string& prefix);

// Writes the header <prefix>0,... followed by one line per row.
void write_csv(const std::string& path, const std::string& prefix, const Table& table);

// Shortest representation that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

// Reads a whole file into memory.
[[nodiscard]] std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace steingrad_cli
