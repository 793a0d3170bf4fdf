#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revive/bytes.hpp"

namespace revive::compress {

enum class Format { plain, gzip, bzip2, xz };

std::string_view to_string(Format f);

/// Identifies the container by magic bytes. lzip, zip and zstd streams raise
/// Error(UnknownFormat); anything unrecognised is `plain`.
Format detect_format(ByteView stream);

enum class Family { gnu, zlib, bzip2, xz };

/// One entry of the compressor catalog.
struct Compressor {
    std::string id;
    Family family;
    int level;
    bool rsyncable = false;
    bool extreme = false;

    friend bool operator==(const Compressor&, const Compressor&) = default;
};

/// gnu-1..9, gnu-best-rsync, zlib-1..9, bzip2-1..9, xz-0..9 and xz-0e..9e.
const std::vector<Compressor>& catalog();

/// Throws std::invalid_argument for ids outside the catalog.
const Compressor& compressor(std::string_view id);

// --- gzip ---------------------------------------------------------------------

inline constexpr std::uint8_t kFText = 0x01, kFHcrc = 0x02, kFExtra = 0x04, kFName = 0x08, kFComment = 0x10;

struct GzipHeader {
    std::uint32_t mtime = 0;
    std::uint8_t extra_flags = 0;
    std::uint8_t os = 3;
    /// FLG byte; the optional fields below are present iff their bit is set.
    std::uint8_t flags = 0;
    std::optional<std::string> extra;
    std::optional<std::string> file_name;
    std::optional<std::string> comment;
    std::optional<std::uint16_t> header_crc;

    friend bool operator==(const GzipHeader&, const GzipHeader&) = default;
};

struct GzipFooter {
    std::uint32_t crc = 0;
    std::uint32_t isize = 0;

    friend bool operator==(const GzipFooter&, const GzipFooter&) = default;
};

struct GzipMember {
    GzipHeader header;
    GzipFooter footer;
    /// Raw deflate data between header and footer.
    Bytes body;
    Bytes payload;
};

Bytes encode_gzip_header(const GzipHeader& h);

/// Splits a gzip file into members and inflates them. Throws
/// Error(CorruptStream) on malformed data or CRC/size mismatches.
std::vector<GzipMember> parse_gzip(ByteView stream);

/// Raw deflate data as produced by a gnu or zlib catalog entry.
Bytes deflate_raw(ByteView payload, const Compressor& c);

/// Rebuilds one member: header, deflate(payload), footer computed from
/// `payload`.
Bytes gzip_member(ByteView payload, const Compressor& c, const GzipHeader& header);

// --- bzip2 / xz -------------------------------------------------------------------

enum class XzCheck { none = 0, crc32 = 1, crc64 = 4, sha256 = 10 };

std::string_view to_string(XzCheck c);
XzCheck xz_check_from_string(std::string_view s);

struct Bzip2Info {
    int block_size = 9;
    std::size_t streams = 1;
};

struct XzInfo {
    XzCheck check = XzCheck::crc64;
    std::size_t streams = 1;
    std::size_t blocks = 1;
    std::optional<std::uint32_t> dict_size;
};

Bytes bzip2_decompress(ByteView stream, Bzip2Info* info = nullptr);
Bytes xz_decompress(ByteView stream, XzInfo* info = nullptr);

Bytes bzip2_compress(ByteView payload, int level);
Bytes xz_compress(ByteView payload, int preset, bool extreme, XzCheck check);

// --- generic ----------------------------------------------------------------------

struct Decompressed {
    Format format = Format::plain;
    Bytes payload;
    std::vector<GzipMember> members;
    Bzip2Info bzip2;
    XzInfo xz;
};

Decompressed decompress(ByteView stream);

/// Re-runs `c` over `payload`. For gzip the header is spliced in verbatim;
/// for xz `check` selects the integrity check.
Bytes recompress(ByteView payload, const Compressor& c, const GzipHeader& header = {},
                 XzCheck check = XzCheck::crc64);

/// Catalog entries in the order they are tried for a given stream.
std::vector<const Compressor*> search_order(Format format, std::uint8_t gzip_xfl = 0,
                                            std::optional<int> bzip2_block_size = std::nullopt,
                                            std::optional<std::uint32_t> xz_dict_size = std::nullopt);

/// First catalog entry reproducing the deflate `body` from `payload`.
std::optional<Compressor> guess_deflate(ByteView payload, ByteView body, std::uint8_t xfl);

/// First catalog entry whose recompression of `payload` reproduces
/// `original` (a single-member gzip, single-stream bzip2 or single-block xz
/// file). Throws Error(NoMatchingCompressor).
Compressor guess_compressor(ByteView payload, ByteView original);

} // namespace revive::compress
