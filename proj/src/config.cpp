#include "bobylev/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bobylev/errors.hpp"

namespace bobylev {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || errno != 0 || *end != '\0') throw ConfigError("key '" + key + "': not a number: " + text);
    return v;
}

}  // namespace

std::vector<std::string> split_top_level(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (depth < 0) throw ConfigError("unbalanced parentheses in: " + s);
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) throw ConfigError("unbalanced parentheses in: " + s);
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
    KeyValues kv;
    kv.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
        if (!kv.kv_.emplace(key, value).second)
            throw ConfigError(origin + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    return kv;
}

KeyValues KeyValues::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path);
}

bool KeyValues::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string KeyValues::str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
    used_.insert(key);
    return it->second;
}

std::string KeyValues::str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
}

double KeyValues::num(const std::string& key) const { return to_number(key, str(key)); }

double KeyValues::num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

int KeyValues::integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const double v = num(key);
    if (v != static_cast<int>(v)) throw ConfigError("key '" + key + "': expected an integer");
    return static_cast<int>(v);
}

bool KeyValues::flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true or false");
}

std::vector<std::string> KeyValues::strs(const std::string& key, const std::vector<std::string>& fallback) const {
    if (!has(key)) return fallback;
    std::string v = str(key);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw ConfigError("key '" + key + "': unterminated list");
        v = v.substr(1, v.size() - 2);
    }
    return split_top_level(v);
}

std::vector<double> KeyValues::nums(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& s : strs(key, {})) out.push_back(to_number(key, s));
    return out;
}

std::vector<std::string> KeyValues::unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
        if (!used_.count(k)) out.push_back(k);
    return out;
}

}  // namespace bobylev
