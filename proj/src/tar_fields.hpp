#pragma once

#include <array>
#include <cstddef>

#include "revive/tar.hpp"

namespace revive::tar::detail {

struct OctalDesc {
    const char* key;
    std::size_t offset;
    std::size_t width;
    OctalField TarHeaderFields::*field;
    OctalPatch TarHeaderPatch::*patch;
};

struct TextDesc {
    const char* key;
    std::size_t offset;
    std::size_t width;
    TextField TarHeaderFields::*field;
    TextPatch TarHeaderPatch::*patch;
};

// Fixed-width byte fields stored verbatim (header padding is normalised to
// "" when all zero).
struct BlobDesc {
    const char* key;
    std::size_t offset;
    std::size_t width;
    std::string TarHeaderFields::*field;
    std::optional<std::string> TarHeaderPatch::*patch;
};

inline constexpr std::size_t kNameOffset = 0, kNameWidth = 100;
inline constexpr std::size_t kChksumOffset = 148, kChksumWidth = 8;
inline constexpr std::size_t kTypeflagOffset = 156;

inline constexpr std::array<OctalDesc, 8> kOctalFields{{
    {"mode", 100, 8, &TarHeaderFields::mode, &TarHeaderPatch::mode},
    {"uid", 108, 8, &TarHeaderFields::uid, &TarHeaderPatch::uid},
    {"gid", 116, 8, &TarHeaderFields::gid, &TarHeaderPatch::gid},
    {"size", 124, 12, &TarHeaderFields::size, &TarHeaderPatch::size},
    {"mtime", 136, 12, &TarHeaderFields::mtime, &TarHeaderPatch::mtime},
    {"chksum", 148, 8, &TarHeaderFields::chksum, &TarHeaderPatch::chksum},
    {"devmajor", 329, 8, &TarHeaderFields::devmajor, &TarHeaderPatch::devmajor},
    {"devminor", 337, 8, &TarHeaderFields::devminor, &TarHeaderPatch::devminor},
}};

inline constexpr std::array<TextDesc, 4> kTextFields{{
    {"linkname", 157, 100, &TarHeaderFields::linkname, &TarHeaderPatch::linkname},
    {"uname", 265, 32, &TarHeaderFields::uname, &TarHeaderPatch::uname},
    {"gname", 297, 32, &TarHeaderFields::gname, &TarHeaderPatch::gname},
    {"prefix", 345, 155, &TarHeaderFields::prefix, &TarHeaderPatch::prefix},
}};

inline constexpr std::array<BlobDesc, 3> kBlobFields{{
    {"magic", 257, 6, &TarHeaderFields::magic, &TarHeaderPatch::magic},
    {"version", 263, 2, &TarHeaderFields::version, &TarHeaderPatch::version},
    {"header-padding", 500, 12, &TarHeaderFields::header_padding, &TarHeaderPatch::header_padding},
}};

} // namespace revive::tar::detail
