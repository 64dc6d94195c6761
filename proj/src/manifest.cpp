#include "efpsa/manifest.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <sstream>

#include "efpsa/errors.hpp"

namespace efpsa::cli {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw NumericalError("number formatting failed");
    return std::string(buf, p);
}

void Manifest::param(std::string key, std::string value) { parameters.emplace_back(std::move(key), std::move(value)); }

void Manifest::param(std::string key, double value) { param(std::move(key), format_number(value)); }

void Manifest::input(const std::string& path, std::string_view contents) {
    inputs.emplace_back(path, sha256_hex(contents));
}

namespace {

std::string one_line(std::string s) {
    for (auto& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

}  // namespace

std::string Manifest::header() const {
    std::ostringstream os;
    os << "# efpsa " << kVersion << '\n';
    os << "# subcommand: " << subcommand << '\n';
    if (!output.empty()) os << "# output: " << output << '\n';
    if (seed) os << "# seed: " << *seed << '\n';
    for (const auto& [k, v] : parameters) os << "# param " << k << ": " << one_line(v) << '\n';
    for (const auto& [path, digest] : inputs) os << "# input " << one_line(path) << " sha256: " << digest << '\n';
    for (const auto& n : notes) os << "# note: " << one_line(n) << '\n';
    return os.str();
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw NumericalError("csv row width mismatch");
    rows_.push_back(std::move(cells));
    return *this;
}

CsvTable& CsvTable::row_numbers(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(format_number(v));
    return row(std::move(s));
}

std::string CsvTable::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    return os.str();
}

}  // namespace efpsa::cli
