#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace artic {

/// Line-oriented key=value settings. '#' starts a comment; blank lines are
/// ignored; whitespace around keys and values is trimmed. Consumers take
/// the keys they understand and finally call require_all_consumed() so that
/// unknown keys surface as ConfigError.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::optional<std::string> take_string(const std::string& key);
    std::optional<long long> take_int(const std::string& key);
    std::optional<std::size_t> take_count(const std::string& key);
    std::optional<double> take_real(const std::string& key);
    std::optional<bool> take_bool(const std::string& key);

    std::vector<std::string> unconsumed() const;
    void require_all_consumed() const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
    std::string origin_;
};

}  // namespace artic
