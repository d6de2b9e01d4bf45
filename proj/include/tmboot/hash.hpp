#pragma once

#include <string>
#include <string_view>

namespace tmboot {

/// Lowercase hex SHA-256 of `data`, truncated to `hex_chars` characters.
std::string sha256_hex(std::string_view data, std::size_t hex_chars = 16);

}  // namespace tmboot
