#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cls {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text. `#` starts a comment; blank lines are ignored;
/// list values are comma-separated. Reads are tracked so callers can reject
/// misspelled keys via unused_keys().
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;

    std::vector<std::string> unused_keys() const;
    const std::string& source() const { return source_; }

private:
    const std::string* lookup(const std::string& key) const;
    [[noreturn]] void bad_value(const std::string& key, const std::string& expected) const;

    std::string source_;
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace cls
