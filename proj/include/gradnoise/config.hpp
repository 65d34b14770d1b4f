#pragma once

#include "error.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace gradnoise {

/// Flat key/value configuration.
///
/// Grammar, one entry per line:
///
///     # comment
///     key = value
///
/// Keys are [A-Za-z0-9_.-]+; values run to end of line with surrounding
/// whitespace trimmed. A later assignment to the same key wins, as do
/// `--set key=value` overrides applied after loading.
class Config {
public:
    using Entries = std::map<std::string, std::string>;

    Config() = default;
    explicit Config(Entries entries) : entries_(std::move(entries)) {}

    static Config parse(std::string_view text, const std::string& origin = "<config>") {
        Config cfg;
        std::istringstream in{std::string(text)};
        std::string line;
        for (int number = 1; std::getline(in, line); ++number) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            require(eq != std::string::npos, ErrorKind::config,
                    origin + ":" + std::to_string(number) + ": expected 'key = value'");
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), origin + ":" + std::to_string(number));
        }
        return cfg;
    }

    /// Load a flat config file, or the "config" object of a run manifest
    /// when the file is JSON.
    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path);
        require(static_cast<bool>(in), ErrorKind::config, "cannot open config file " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text[first] == '{') {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(text);
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorKind::config, path.string() + ": invalid JSON: " + e.what());
            }
            require(j.contains("config") && j["config"].is_object(), ErrorKind::config,
                    path.string() + ": JSON config must carry a \"config\" object");
            Config cfg;
            for (const auto& [key, value] : j["config"].items()) {
                require(value.is_string(), ErrorKind::config, path.string() + ": config value for '" + key + "' must be a string");
                cfg.set(key, value.get<std::string>(), path.string());
            }
            return cfg;
        }
        return parse(text, path.string());
    }

    void set(const std::string& key, const std::string& value, const std::string& origin = "<set>") {
        require(valid_key(key), ErrorKind::config, origin + ": invalid key '" + key + "'");
        entries_[key] = value;
    }

    /// Apply "key=value".
    void apply_override(std::string_view assignment) {
        const auto eq = assignment.find('=');
        require(eq != std::string_view::npos, ErrorKind::config,
                "--set expects key=value, got '" + std::string(assignment) + "'");
        set(trim(std::string(assignment.substr(0, eq))), trim(std::string(assignment.substr(eq + 1))), "--set");
    }

    const Entries& entries() const noexcept { return entries_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static bool valid_key(const std::string& key) {
        if (key.empty()) return false;
        for (char c : key) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                            c == '.' || c == '-';
            if (!ok) return false;
        }
        return true;
    }

    Entries entries_;
};

/// A key a subcommand accepts, with its default.
struct KeySpec {
    std::string name;
    std::string default_value;
    std::string help;
};

/// Config with every known key filled in. Unknown keys are rejected before
/// anything runs; typed accessors validate on access.
class ResolvedConfig {
public:
    ResolvedConfig(const Config& cfg, const std::vector<KeySpec>& schema) {
        for (const auto& key : schema) values_[key.name] = key.default_value;
        for (const auto& [key, value] : cfg.entries()) {
            require(values_.count(key) != 0, ErrorKind::config, "unknown configuration key '" + key + "'");
            values_[key] = value;
        }
    }

    const Config::Entries& values() const noexcept { return values_; }

    const std::string& str(const std::string& key) const { return values_.at(key); }

    double real(const std::string& key) const { return parse_real(key, str(key)); }

    std::uint64_t u64(const std::string& key) const { return parse_u64(key, str(key)); }

    std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

    bool flag(const std::string& key) const {
        const auto& v = str(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail(ErrorKind::config, "key '" + key + "' expects true/false, got '" + v + "'");
    }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split(str(key))) out.push_back(parse_real(key, item));
        return out;
    }

    std::vector<std::size_t> sizes(const std::string& key) const {
        std::vector<std::size_t> out;
        for (const auto& item : split(str(key))) out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
        return out;
    }

    /// Flat-file rendering of every resolved key, sorted.
    std::string to_text() const {
        std::string out;
        for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
        return out;
    }

private:
    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            if (b == std::string::npos) continue;
            out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
        }
        return out;
    }

    static double parse_real(const std::string& key, const std::string& v) {
        errno = 0;
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        require(!v.empty() && end == v.c_str() + v.size() && errno == 0, ErrorKind::config,
                "key '" + key + "' expects a number, got '" + v + "'");
        return x;
    }

    static std::uint64_t parse_u64(const std::string& key, const std::string& v) {
        errno = 0;
        char* end = nullptr;
        const bool digits = !v.empty() && v.find_first_not_of("0123456789") == std::string::npos;
        const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        require(digits && end == v.c_str() + v.size() && errno == 0, ErrorKind::config,
                "key '" + key + "' expects a non-negative integer, got '" + v + "'");
        return x;
    }

    Config::Entries values_;
};

}  // namespace gradnoise
