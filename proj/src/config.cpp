#include "efpsa/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "efpsa/errors.hpp"

namespace efpsa {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw ValidationError("config line " + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view s, std::size_t line) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        fail(line, "not a number: '" + std::string(s) + "'");
    }
    if (!std::isfinite(v)) fail(line, "non-finite number");
    return v;
}

bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
    }
    return true;
}

}  // namespace

Config Config::parse(std::string_view text) {
    Config cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

        // strip comments outside of strings
        bool in_str = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_str = !in_str;
            if (line[i] == '#' && !in_str) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;

        auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        auto raw = trim(line.substr(eq + 1));
        if (!valid_key(key)) fail(line_no, "invalid key '" + std::string(key) + "'");
        if (raw.empty()) fail(line_no, "missing value for '" + std::string(key) + "'");
        std::string k(key);
        if (cfg.values_.count(k)) fail(line_no, "duplicate key '" + k + "'");

        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"') fail(line_no, "unterminated string");
            cfg.values_[k] = std::string(raw.substr(1, raw.size() - 2));
        } else if (raw.front() == '[') {
            if (raw.back() != ']') fail(line_no, "unterminated array");
            auto body = trim(raw.substr(1, raw.size() - 2));
            std::vector<double> items;
            while (!body.empty()) {
                auto comma = body.find(',');
                items.push_back(parse_number(body.substr(0, comma), line_no));
                if (comma == std::string_view::npos) break;
                body = trim(body.substr(comma + 1));
                if (body.empty()) fail(line_no, "trailing comma in array");
            }
            cfg.values_[k] = std::move(items);
        } else {
            cfg.values_[k] = parse_number(raw, line_no);
        }
    }
    return cfg;
}

double Config::number(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("config: missing key '" + key + "'");
    if (auto* d = std::get_if<double>(&it->second)) return *d;
    throw ValidationError("config: key '" + key + "' is not a number");
}

const std::string& Config::string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("config: missing key '" + key + "'");
    if (auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw ValidationError("config: key '" + key + "' is not a string");
}

const std::vector<double>& Config::array(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("config: missing key '" + key + "'");
    if (auto* a = std::get_if<std::vector<double>>(&it->second)) return *a;
    throw ValidationError("config: key '" + key + "' is not an array");
}

}  // namespace efpsa
