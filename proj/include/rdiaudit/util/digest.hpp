#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>

namespace rdiaudit {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// First `hex_chars` of sha256_hex over the fields joined by the unit
/// separator (0x1f). Used for every content-derived identifier.
std::string short_digest(std::initializer_list<std::string_view> fields, std::size_t hex_chars = 16);

}  // namespace rdiaudit
