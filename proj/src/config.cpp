#include "scilit/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace scilit::config {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

Config Config::parse(std::string_view text) {
    Config cfg;
    std::string section;
    size_t line_no = 0;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (end == text.size() && line.empty()) break;
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw InvalidArgument("config line " + std::to_string(line_no) +
                                      ": unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw InvalidArgument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty())
            throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
        const std::string full_key =
            section.empty() ? std::string(key) : section + "." + std::string(key);
        cfg.values_[full_key] = std::string(value);
    }
    return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::optional<std::string> Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    const auto v = get(key);
    return v ? *v : fallback;
}

int64_t Config::get_int(const std::string& key, int64_t fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size())
        throw InvalidArgument("config key " + key + " is not an integer: " + *v);
    return out;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    try {
        size_t consumed = 0;
        const double out = std::stod(*v, &consumed);
        if (consumed != v->size()) throw std::invalid_argument("trailing chars");
        return out;
    } catch (const std::exception&) {
        throw InvalidArgument("config key " + key + " is not a number: " + *v);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw InvalidArgument("config key " + key + " is not a boolean: " + *v);
}

}  // namespace scilit::config
