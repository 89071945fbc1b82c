#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rdiaudit::text {

/// Simple (one-to-one) lowercase mapping over UTF-8: ASCII, Latin-1,
/// Latin Extended-A, Greek and Cyrillic capitals. Other code points and
/// invalid sequences pass through unchanged.
std::string casefold(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool contains_word(std::string_view haystack, std::string_view needle);

/// Formats `value` with exactly `places` decimals after half-up rounding.
std::string format_fixed(double value, int places = 2);
/// Half-up rounding at `places` decimals, tolerant of binary representation
/// error (1.005 rounds to 1.01).
double round_half_up(double value, int places = 2);
/// Shortest round-trip decimal, always with a fractional part ("25.0").
std::string format_shortest(double value);

}  // namespace rdiaudit::text
