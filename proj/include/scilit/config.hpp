#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "scilit/error.hpp"

namespace scilit::config {

// Flat key/value configuration with INI-style sections:
//   # comment
//   [section]
//   key = value
// Section headers prefix subsequent keys as "section.key". Values are raw
// strings; typed getters parse on access. Later assignments win, which is
// how flag and environment overrides are layered on top of a file.
class Config {
public:
    static Config parse(std::string_view text);
    static Config parse_file(const std::filesystem::path& path);

    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    int64_t get_int(const std::string& key, int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool contains(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace scilit::config
