#pragma once

// Flat key/value configuration documents.
//
//   # comment
//   a = 0.2e-6
//   label = "device 7"
//   nv_axis = [1, 1, 1]
//
// One assignment per line. Values are numbers, double-quoted strings, or
// one-level arrays of numbers. Keys are bare words ([A-Za-z0-9_.-]).

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace efpsa {

using ConfigValue = std::variant<double, std::string, std::vector<double>>;

class Config {
public:
    /// Throws ValidationError with the offending line number on any syntax error.
    static Config parse(std::string_view text);

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] double number(const std::string& key) const;
    [[nodiscard]] const std::string& string(const std::string& key) const;
    [[nodiscard]] const std::vector<double>& array(const std::string& key) const;

    [[nodiscard]] double number_or(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    [[nodiscard]] const std::map<std::string, ConfigValue>& entries() const { return values_; }

private:
    std::map<std::string, ConfigValue> values_;
};

}  // namespace efpsa
