#include "artic/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "artic/error.hpp"

namespace artic {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (cfg.values_.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValueConfig::take_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
}

std::optional<long long> KeyValueConfig::take_int(const std::string& key) {
    const auto s = take_string(key);
    if (!s) return std::nullopt;
    long long v = 0;
    const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || p != s->data() + s->size())
        throw ConfigError(origin_ + ": '" + key + "' expects an integer, got '" + *s + "'");
    return v;
}

std::optional<std::size_t> KeyValueConfig::take_count(const std::string& key) {
    const auto v = take_int(key);
    if (!v) return std::nullopt;
    if (*v < 0) throw ConfigError(origin_ + ": '" + key + "' must be non-negative");
    return static_cast<std::size_t>(*v);
}

std::optional<double> KeyValueConfig::take_real(const std::string& key) {
    const auto s = take_string(key);
    if (!s) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(*s, &used);
        if (used != s->size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": '" + key + "' expects a number, got '" + *s + "'");
    }
}

std::optional<bool> KeyValueConfig::take_bool(const std::string& key) {
    const auto s = take_string(key);
    if (!s) return std::nullopt;
    if (*s == "true" || *s == "1" || *s == "yes") return true;
    if (*s == "false" || *s == "0" || *s == "no") return false;
    throw ConfigError(origin_ + ": '" + key + "' expects true/false, got '" + *s + "'");
}

std::vector<std::string> KeyValueConfig::unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!consumed_.count(k)) out.push_back(k);
    return out;
}

void KeyValueConfig::require_all_consumed() const {
    const auto left = unconsumed();
    if (left.empty()) return;
    std::string msg = origin_ + ": unknown key(s):";
    for (const auto& k : left) msg += " " + k;
    throw ConfigError(msg);
}

}  // namespace artic
