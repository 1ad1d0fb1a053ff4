#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace latnet::util {

/// Ordered `key=value` text block. One pair per line, `#` starts a comment line.
/// Used for dataset metadata, checkpoint headers and config files.
class KeyValue {
public:
    void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void set(const std::string& key, std::uint64_t value);
    void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string to_string() const;
    static KeyValue parse(std::string_view text);

    static KeyValue read_file(const std::string& path);
    void write_file(const std::string& path) const;

private:
    std::map<std::string, std::string> entries_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_exact(double value);
double parse_double(std::string_view text);

}  // namespace latnet::util
