#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace wfsep {

struct ConfigValue {
    enum class Kind { Number, Boolean, Text, List };
    Kind kind = Kind::Number;
    double number = 0.0;
    bool boolean = false;
    std::string text;
    std::vector<double> list;

    static ConfigValue parse(std::string_view token, bool allow_bare_text = false);
    std::string to_string() const;
};

/// Flat dotted-key view of a small TOML subset: [section] / [a.b] headers,
/// key = value lines, '#' comments, values that are numbers, booleans,
/// double-quoted strings or single-line numeric arrays.
class Config {
public:
    static Config parse(std::string_view text);
    static Config load(const std::filesystem::path& path);

    /// Applies "dotted.key=value"; unquoted text is accepted as a string.
    void set_override(std::string_view assignment);
    void set(const std::string& key, ConfigValue value) { values_[key] = std::move(value); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    double number(const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

    /// Keys present in the file but never read. Used to reject typos.
    std::vector<std::string> unused_keys() const;
    const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }

private:
    const ConfigValue* find(const std::string& key, ConfigValue::Kind kind) const;

    std::map<std::string, ConfigValue> values_;
    mutable std::set<std::string> used_;
};

}  // namespace wfsep
