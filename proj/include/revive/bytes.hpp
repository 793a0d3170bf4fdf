#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace revive {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s)
{
    auto v = as_bytes(s);
    return {v.begin(), v.end()};
}

inline std::string to_string(ByteView b)
{
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

/// Lowercase hexadecimal rendering.
std::string to_hex(ByteView data);

/// Parses an even-length hex string (either case). Throws std::invalid_argument.
Bytes from_hex(std::string_view hex);

bool is_hex(std::string_view s);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, ByteView data);

} // namespace revive
