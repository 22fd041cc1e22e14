#include "qh/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "qh/errors.hpp"

namespace qh {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool is_name(const std::string& s, bool allow_dash) {
    if (s.empty()) return false;
    for (char ch : s) {
        const bool ok = std::islower(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch)) ||
                        ch == '_' || (allow_dash && ch == '-');
        if (!ok) return false;
    }
    return true;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) return std::nullopt;
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    cfg.source_ = text;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    auto error = [&](const std::string& msg, const std::string& field = {}) {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg, line, field);
    };
    while (std::getline(in, raw)) {
        ++line;
        // Strip comments outside quotes.
        std::string body;
        bool in_quote = false;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const char ch = raw[i];
            if (ch == '"' && (i == 0 || raw[i - 1] != '\\')) in_quote = !in_quote;
            if (!in_quote && (ch == '#' || ch == ';')) break;
            body += ch;
        }
        if (in_quote) error("unterminated string");
        body = trim(body);
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') error("section header must end with ']'");
            section = trim(body.substr(1, body.size() - 2));
            if (!is_name(section, true)) error("invalid section name '" + section + "'");
            for (const auto& s : cfg.section_order_)
                if (s == section) error("section [" + section + "] appears twice", section);
            cfg.section_order_.push_back(section);
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) error("expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (section.empty()) error("key '" + key + "' appears before any [section]", key);
        if (!is_name(key, false)) error("invalid key name '" + key + "'", key);
        const std::string full = section + "." + key;
        if (cfg.entries_.count(full)) error("duplicate key " + full, full);
        if (value.empty()) error("missing value for " + full, full);
        Entry e;
        e.line = line;
        if (value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') error("string value must be a single quoted token", full);
            std::string s;
            for (std::size_t i = 1; i + 1 < value.size(); ++i) {
                if (value[i] == '\\' && i + 2 < value.size()) {
                    const char n = value[++i];
                    if (n != '"' && n != '\\') error("unknown escape \\" + std::string(1, n), full);
                    s += n;
                } else if (value[i] == '"') {
                    error("unescaped quote inside string", full);
                } else {
                    s += value[i];
                }
            }
            e.text = s;
            e.quoted = true;
        } else {
            e.text = value;
        }
        cfg.entries_[full] = e;
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
}

const Config::Entry& Config::entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(origin_ + ": missing required key " + key, 0, key);
    used_.insert(key);
    return it->second;
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

std::vector<std::string> Config::sections() const { return section_order_; }

void Config::fail(const std::string& key, const std::string& message) const {
    auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + key + ": " + message, line, key);
}

double Config::number(const std::string& key) const {
    const Entry& e = entry(key);
    const auto v = e.quoted ? std::nullopt : to_double(e.text);
    if (!v) fail(key, "expected a number, got '" + e.text + "'");
    return *v;
}

double Config::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::int64_t Config::integer(const std::string& key) const {
    const Entry& e = entry(key);
    std::int64_t v = 0;
    const char* end = e.text.data() + e.text.size();
    auto [p, ec] = std::from_chars(e.text.data(), end, v);
    if (e.quoted || ec != std::errc() || p != end) fail(key, "expected an integer, got '" + e.text + "'");
    return v;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
}

bool Config::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Entry& e = entry(key);
    if (!e.quoted && e.text == "true") return true;
    if (!e.quoted && e.text == "false") return false;
    fail(key, "expected true or false, got '" + e.text + "'");
}

std::string Config::string(const std::string& key) const {
    const Entry& e = entry(key);
    if (!e.quoted && e.text.find(',') != std::string::npos) fail(key, "expected a single value, got a list");
    return e.text;
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const {
    const Entry& e = entry(key);
    if (e.quoted) fail(key, "expected a list of numbers, got a string");
    std::vector<double> out;
    for (const std::string& item : split_list(e.text)) {
        const auto v = to_double(item);
        if (!v) fail(key, "expected a number in the list, got '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
    return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> Config::words(const std::string& key) const {
    const Entry& e = entry(key);
    if (e.quoted) return {e.text};
    std::vector<std::string> out = split_list(e.text);
    for (const std::string& w : out)
        if (w.empty()) fail(key, "empty item in list");
    return out;
}

void Config::reject_unused() const {
    for (const auto& [k, e] : entries_)
        if (!used_.count(k)) fail(k, "unknown key for this experiment");
}

void Config::set(const std::string& key, const std::string& text) {
    Entry e;
    e.text = text;
    entries_[key] = e;
}

}  // namespace qh
