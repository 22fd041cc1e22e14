#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qh {

// Sectioned key = value text; the grammar is in docs/formats.md. Values keep their source
// text and line and are typed on access, so type errors report the offending line and key.
class Config {
public:
    struct Entry {
        std::string text;  // unquoted string or literal scalar/list text
        bool quoted = false;
        int line = 0;
    };

    static Config parse(const std::string& text, const std::string& origin = "<config>");
    static Config load(const std::string& path);

    const std::string& origin() const { return origin_; }
    const std::string& source() const { return source_; }

    // Keys are "section.key".
    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const Entry& entry(const std::string& key) const;
    std::vector<std::string> keys() const;
    std::vector<std::string> sections() const;

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    std::int64_t integer(const std::string& key) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> words(const std::string& key) const;

    // Key-specific check failures; line and key are attached.
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    // Every key read so far through the accessors (or marked) counts as used.
    void mark_used(const std::string& key) const { used_.insert(key); }
    // Throws ConfigError naming the first key that was never read.
    void reject_unused() const;

    // Replaces or adds a value, as if written on line 0.
    void set(const std::string& key, const std::string& text);

private:
    std::string origin_;
    std::string source_;
    std::map<std::string, Entry> entries_;
    std::vector<std::string> section_order_;
    mutable std::set<std::string> used_;
};

}  // namespace qh
