#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace netgan {

/// Shortest decimal text that parses back to exactly `value` ("inf"/"-inf" for infinities).
std::string format_double(double value);

double parse_double(std::string_view text, std::string_view context);
std::int64_t parse_int(std::string_view text, std::string_view context);
std::uint64_t parse_uint(std::string_view text, std::string_view context);
bool parse_bool(std::string_view text, std::string_view context);

std::string_view trim(std::string_view text);

/// Flat `key = value` text: one pair per line, '#' starts a comment line, blank lines ignored.
/// Keys keep insertion order when rendered.
class KeyValueFile {
public:
    static KeyValueFile parse(std::string_view text);
    static KeyValueFile read(const std::string& path);

    void set(const std::string& key, std::string value);
    [[nodiscard]] bool contains(const std::string& key) const;
    /// Throws ParseError when the key is absent.
    [[nodiscard]] const std::string& get(const std::string& key) const;

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    [[nodiscard]] std::string render() const;
    void write(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace netgan
