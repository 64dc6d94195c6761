#pragma once

// Run manifests and CSV emission. Every CSV starts with its manifest as
// '#' comment lines; nothing time-dependent is recorded, so equal inputs give
// equal bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace efpsa::cli {

inline constexpr std::string_view kVersion = "0.1.0";

std::string sha256_hex(std::string_view data);

/// Shortest round-trip decimal form of v.
std::string format_number(double v);

struct Manifest {
    std::string subcommand;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
    std::optional<std::uint64_t> seed;
    std::string output;                                        // file name
    std::vector<std::string> notes;

    void param(std::string key, std::string value);
    void param(std::string key, double value);
    void input(const std::string& path, std::string_view contents);

    [[nodiscard]] std::string header() const;
};

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);
    CsvTable& row(std::vector<std::string> cells);
    CsvTable& row_numbers(const std::vector<double>& cells);
    [[nodiscard]] std::string str() const;
    [[nodiscard]] std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace efpsa::cli
