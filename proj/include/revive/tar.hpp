#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "revive/bytes.hpp"
#include "revive/hash.hpp"
#include "revive/nar.hpp"

namespace revive::tar {

inline constexpr std::size_t kBlockSize = 512;

/// A numeric header field. On disk it is `value` in octal, left-padded with
/// '0' so that the digits and `trailer` fill the field exactly (no digits at
/// all when the value is 0 and the trailer fills the field). Any other
/// spelling (leading spaces, base-256, ...) is kept verbatim in `raw`.
struct OctalField {
    std::uint64_t value = 0;
    std::string trailer = std::string(1, '\0');
    std::optional<std::string> raw;

    friend bool operator==(const OctalField&, const OctalField&) = default;
};

/// A NUL-terminated text field. `raw` holds the exact field bytes when
/// anything other than NULs follows the terminator.
struct TextField {
    std::string value;
    std::optional<std::string> raw;

    friend bool operator==(const TextField&, const TextField&) = default;
};

struct TarHeaderFields {
    TextField name;
    OctalField mode;
    OctalField uid;
    OctalField gid;
    OctalField size;
    OctalField mtime;
    OctalField chksum;
    std::uint8_t typeflag = 0;
    TextField linkname;
    std::string magic = std::string(6, '\0');
    std::string version = std::string(2, '\0');
    TextField uname;
    TextField gname;
    OctalField devmajor;
    OctalField devminor;
    TextField prefix;
    /// Bytes 500-511 of the header block; empty means all zero.
    std::string header_padding;
    /// Padding after the member data up to the block boundary; empty means
    /// all zero.
    std::string data_padding;

    friend bool operator==(const TarHeaderFields&, const TarHeaderFields&) = default;
};

struct OctalPatch {
    std::optional<std::uint64_t> value;
    std::optional<std::string> trailer;
    std::optional<std::string> raw;
    bool empty() const { return !value && !trailer && !raw; }
    friend bool operator==(const OctalPatch&, const OctalPatch&) = default;
};

struct TextPatch {
    std::optional<std::string> value;
    std::optional<std::string> raw;
    bool empty() const { return !value && !raw; }
    friend bool operator==(const TextPatch&, const TextPatch&) = default;
};

/// Fields of one member that deviate from the default header.
struct TarHeaderPatch {
    std::optional<std::string> name_raw;
    OctalPatch mode, uid, gid, size, mtime, chksum;
    std::optional<std::uint8_t> typeflag;
    TextPatch linkname;
    std::optional<std::string> magic, version;
    TextPatch uname, gname;
    OctalPatch devmajor, devminor;
    TextPatch prefix;
    std::optional<std::string> header_padding, data_padding;

    friend bool operator==(const TarHeaderPatch&, const TarHeaderPatch&) = default;
};

struct TarMember {
    /// Value of the header's name field (the key in descriptions).
    std::string name;
    TarHeaderPatch fields;
    /// Member data kept in the description because it is not part of the
    /// extracted tree (extended headers, long-name records, files shadowed
    /// by later members, ...).
    std::optional<std::string> data;

    friend bool operator==(const TarMember&, const TarMember&) = default;
};

struct TarballSpec {
    std::string name;
    Sha256Digest digest{};
    TarHeaderFields default_header;
    std::vector<TarMember> members;
    /// Bytes after the last member (end-of-archive blocks and record padding).
    std::uint64_t padding = 0;
    /// Exact trailing bytes when they are not all zero.
    std::optional<std::string> padding_bytes;

    friend bool operator==(const TarballSpec&, const TarballSpec&) = default;
};

struct ParsedTarball {
    TarballSpec spec;
    /// Extraction root: regular files, directories and symlinks as `tar x`
    /// would leave them.
    NarNode tree;
};

/// True when the first block is a header with a valid checksum, or the
/// stream is a bare end-of-archive marker.
bool looks_like_tar(ByteView stream);

ParsedTarball parse_tarball(ByteView stream, std::string name = {});
Bytes serialize_tarball(const TarballSpec& spec, const NarNode& tree);

/// Most frequent value per field (ties go to the earliest member). The name
/// field is not defaulted; raw overrides are never defaulted.
TarHeaderFields compute_default_header(const std::vector<TarHeaderFields>& members);

TarHeaderPatch diff_header(const TarHeaderFields& defaults, const TarHeaderFields& member);
TarHeaderFields apply_patch(const TarHeaderFields& defaults, const std::string& name, const TarHeaderPatch& patch);

/// Full header fields for every member of `spec`.
std::vector<TarHeaderFields> expand_headers(const TarballSpec& spec);

/// Decodes the 512-byte header block into fields (no validation).
TarHeaderFields decode_header(ByteView block);
/// Re-encodes fields into a header block; the checksum is written as stored.
std::array<std::uint8_t, kBlockSize> encode_header(const TarHeaderFields& fields);

/// Unsigned ustar checksum of a header block (chksum field read as spaces).
std::uint64_t header_checksum(ByteView block);

} // namespace revive::tar
