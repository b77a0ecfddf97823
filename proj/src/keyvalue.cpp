#include "netgan/keyvalue.hpp"

#include "netgan/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace netgan {

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::string_view context) {
    const auto t = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw ParseError(std::string(context) + ": not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::int64_t parse_int(std::string_view text, std::string_view context) {
    const auto t = trim(text);
    std::int64_t value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw ParseError(std::string(context) + ": not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::uint64_t parse_uint(std::string_view text, std::string_view context) {
    const auto t = trim(text);
    std::uint64_t value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw ParseError(std::string(context) + ": not a non-negative integer: '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view text, std::string_view context) {
    const auto t = trim(text);
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw ParseError(std::string(context) + ": not a boolean: '" + std::string(text) + "'");
}

KeyValueFile KeyValueFile::parse(std::string_view text) {
    KeyValueFile kv;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        const auto line = trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
        ++line_no;
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty key");
        if (kv.contains(key)) throw ParseError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        kv.set(key, std::string(trim(line.substr(eq + 1))));
    }
    return kv;
}

KeyValueFile KeyValueFile::read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void KeyValueFile::set(const std::string& key, std::string value) {
    if (const auto it = index_.find(key); it != index_.end()) {
        entries_[it->second].second = std::move(value);
        return;
    }
    index_.emplace(key, entries_.size());
    entries_.emplace_back(key, std::move(value));
}

bool KeyValueFile::contains(const std::string& key) const { return index_.count(key) != 0; }

const std::string& KeyValueFile::get(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) throw ParseError("missing key '" + key + "'");
    return entries_[it->second].second;
}

std::string KeyValueFile::render() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

void KeyValueFile::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << render();
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace netgan
