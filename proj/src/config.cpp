#include "cls/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cls {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto pos = value.find(',', start);
        std::string item = trim(std::string_view(value).substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
bool parse_number(const std::string& text, T& out) {
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        if (cfg.values_.count(key))
            throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

const std::string* KeyValueConfig::lookup(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

void KeyValueConfig::bad_value(const std::string& key, const std::string& expected) const {
    throw ConfigError(source_ + ": key '" + key + "' expects " + expected + ", got '" + values_.at(key) + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = lookup(key);
    return v ? *v : fallback;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
    const auto* v = lookup(key);
    if (!v) throw ConfigError(source_ + ": missing required key '" + key + "'");
    return *v;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto* v = lookup(key);
    if (!v) return fallback;
    double out;
    if (!parse_number(*v, out)) bad_value(key, "a real number");
    return out;
}

std::size_t KeyValueConfig::get_size(const std::string& key, std::size_t fallback) const {
    const auto* v = lookup(key);
    if (!v) return fallback;
    std::size_t out;
    if (!parse_number(*v, out)) bad_value(key, "a nonnegative integer");
    return out;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto* v = lookup(key);
    if (!v) return fallback;
    std::uint64_t out;
    if (!parse_number(*v, out)) bad_value(key, "an unsigned 64-bit integer");
    return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto* v = lookup(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    bad_value(key, "true or false");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    const auto* v = lookup(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) {
        double x;
        if (!parse_number(item, x)) bad_value(key, "a comma-separated list of reals");
        out.push_back(x);
    }
    return out;
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
    const auto* v = lookup(key);
    return v ? split_list(*v) : fallback;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) {
        if (!used_.count(key)) out.push_back(key);
    }
    return out;
}

}  // namespace cls
