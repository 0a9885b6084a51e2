#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace epicausal {

/// Flat `key = value` config file. Lines starting with `#` and blank lines
/// are ignored; keys must be unique. Values keep their raw text; typed
/// accessors parse on demand and report the key on failure.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Comma-separated list; empty value yields an empty vector.
    std::vector<std::string> get_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    /// Keys present in the file but never read. Lets callers flag typos.
    std::vector<std::string> unused_keys() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> touched_;

    const std::string& raw(const std::string& key) const;
};

}  // namespace epicausal
