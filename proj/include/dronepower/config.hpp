#pragma once

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dronepower/errors.hpp"
#include "dronepower/io_util.hpp"

namespace dronepower {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t.empty()) {
        throw ParseError(what + ": empty numeric value");
    }
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) {
        throw ParseError(what + ": cannot parse '" + t + "' as a number");
    }
    return v;
}

inline long long parse_int(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ParseError(what + ": cannot parse '" + t + "' as an integer");
    }
    return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace detail

/// Flat `name = value` document: one pair per line, `#` starts a comment,
/// blank lines ignored. Shared by the drone parameter profile, the column
/// map, and the run-defaults file.
class KvDocument {
public:
    static KvDocument parse_string(const std::string& text, const std::string& origin) {
        KvDocument doc;
        doc.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) {
                line.erase(hash);
            }
            const std::string t = detail::trim(line);
            if (t.empty()) {
                continue;
            }
            const std::size_t eq = t.find('=');
            if (eq == std::string::npos) {
                throw ParseError(origin + ":" + std::to_string(lineno) +
                                 ": expected 'name = value', got '" + t + "'");
            }
            const std::string key = detail::trim(t.substr(0, eq));
            const std::string value = detail::trim(t.substr(eq + 1));
            if (key.empty()) {
                throw ParseError(origin + ":" + std::to_string(lineno) + ": empty key");
            }
            if (doc.values_.count(key)) {
                throw ParseError(origin + ":" + std::to_string(lineno) +
                                 ": duplicate key '" + key + "'");
            }
            doc.values_[key] = value;
        }
        return doc;
    }

    static KvDocument parse_file(const std::filesystem::path& path) {
        return parse_string(read_file_text(path), path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw SchemaError(origin_ + ": missing required key '" + key + "'");
        }
        return it->second;
    }

    double get_double(const std::string& key) const {
        return detail::parse_double(get_string(key), origin_ + ": key '" + key + "'");
    }

    long long get_int(const std::string& key) const {
        return detail::parse_int(get_string(key), origin_ + ": key '" + key + "'");
    }

    /// Comma-separated list of doubles.
    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& item : detail::split(get_string(key), ',')) {
            out.push_back(detail::parse_double(item, origin_ + ": key '" + key + "'"));
        }
        return out;
    }

    /// Rejects any key outside `allowed`; lists every offender.
    void require_known_keys(const std::set<std::string>& allowed) const {
        std::string unknown;
        for (const auto& [key, value] : values_) {
            if (!allowed.count(key)) {
                unknown += unknown.empty() ? "'" : ", '";
                unknown += key + "'";
            }
        }
        if (!unknown.empty()) {
            throw SchemaError(origin_ + ": unknown key(s) " + unknown);
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> values_;
    std::string origin_ = "<string>";
};

}  // namespace dronepower
