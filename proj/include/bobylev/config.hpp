#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace bobylev {

/// Flat `key = value` file. '#' starts a comment, lists are comma separated
/// and may be wrapped in brackets. Keys are unique.
class KeyValues {
public:
    static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValues load(const std::string& path);

    bool has(const std::string& key) const;
    std::string str(const std::string& key) const;
    std::string str(const std::string& key, const std::string& fallback) const;
    double num(const std::string& key) const;
    double num(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> nums(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> strs(const std::string& key, const std::vector<std::string>& fallback) const;

    /// Keys never read so far; callers reject them as typos.
    std::vector<std::string> unused() const;
    const std::map<std::string, std::string>& entries() const { return kv_; }
    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> used_;
    std::string origin_;
};

/// Splits at top-level commas, ignoring commas nested inside parentheses.
std::vector<std::string> split_top_level(const std::string& s);

}  // namespace bobylev
