#include "latnet/util/keyvalue.hpp"

#include "latnet/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace latnet::util {

std::string format_exact(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InvalidInputError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

void KeyValue::set(const std::string& key, double value) { entries_[key] = format_exact(value); }
void KeyValue::set(const std::string& key, std::int64_t value) { entries_[key] = std::to_string(value); }
void KeyValue::set(const std::string& key, std::uint64_t value) { entries_[key] = std::to_string(value); }

const std::string& KeyValue::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw InvalidInputError("missing key '" + key + "'");
    }
    return it->second;
}

double KeyValue::get_double(const std::string& key) const { return parse_double(get(key)); }

std::int64_t KeyValue::get_int(const std::string& key) const {
    const std::string& s = get(key);
    std::int64_t value = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidInputError("key '" + key + "' is not an integer: '" + s + "'");
    }
    return value;
}

std::uint64_t KeyValue::get_uint(const std::string& key) const {
    const std::string& s = get(key);
    std::uint64_t value = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidInputError("key '" + key + "' is not an unsigned integer: '" + s + "'");
    }
    return value;
}

double KeyValue::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::int64_t KeyValue::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::string KeyValue::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

KeyValue KeyValue::parse(std::string_view text) {
    KeyValue kv;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        const std::size_t line_start = pos;
        pos = end + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.remove_suffix(1);
        }
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw FormatError("expected key=value line", line_start);
        }
        std::string_view key = line.substr(0, eq);
        std::string_view value = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.remove_suffix(1);
        while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.remove_prefix(1);
        if (key.empty()) throw FormatError("expected key=value line", line_start);
        kv.entries_[std::string(key)] = std::string(value);
    }
    return kv;
}

KeyValue KeyValue::read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void KeyValue::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << to_string();
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace latnet::util
