#include "revive/compress.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include <bzlib.h>
#include <lzma.h>
#include <zlib.h>

#include "revive/error.hpp"
#include "revive/gnu_deflate.hpp"
#include "revive/hash.hpp"

extern "C" void bz_internal_error(int code)
{
    std::fprintf(stderr, "bzip2 internal error %d\n", code);
    std::abort();
}

namespace revive::compress {

std::string_view to_string(Format f)
{
    switch (f) {
    case Format::plain: return "plain";
    case Format::gzip: return "gzip";
    case Format::bzip2: return "bzip2";
    case Format::xz: return "xz";
    }
    return "?";
}

namespace {

bool starts_with(ByteView s, std::initializer_list<std::uint8_t> magic)
{
    if (s.size() < magic.size()) return false;
    return std::equal(magic.begin(), magic.end(), s.begin());
}

} // namespace

Format detect_format(ByteView s)
{
    if (starts_with(s, {0x1f, 0x8b})) return Format::gzip;
    if (starts_with(s, {'B', 'Z', 'h'})) return Format::bzip2;
    if (starts_with(s, {0xfd, '7', 'z', 'X', 'Z', 0x00})) return Format::xz;
    if (starts_with(s, {'L', 'Z', 'I', 'P'})) fail(ErrorKind::UnknownFormat, "lzip compression is not supported");
    if (starts_with(s, {'P', 'K', 0x03, 0x04}) || starts_with(s, {'P', 'K', 0x05, 0x06}))
        fail(ErrorKind::UnknownFormat, "zip archives are not supported");
    if (starts_with(s, {0x28, 0xb5, 0x2f, 0xfd})) fail(ErrorKind::UnknownFormat, "zstd compression is not supported");
    if (starts_with(s, {0x1f, 0x9d})) fail(ErrorKind::UnknownFormat, "compress (.Z) streams are not supported");
    return Format::plain;
}

const std::vector<Compressor>& catalog()
{
    static const std::vector<Compressor> entries = [] {
        std::vector<Compressor> v;
        for (int l = 1; l <= 9; ++l) v.push_back({"gnu-" + std::to_string(l), Family::gnu, l});
        v.push_back({"gnu-best-rsync", Family::gnu, 9, true});
        for (int l = 1; l <= 9; ++l) v.push_back({"zlib-" + std::to_string(l), Family::zlib, l});
        for (int l = 1; l <= 9; ++l) v.push_back({"bzip2-" + std::to_string(l), Family::bzip2, l});
        for (int l = 0; l <= 9; ++l) {
            v.push_back({"xz-" + std::to_string(l), Family::xz, l});
            v.push_back({"xz-" + std::to_string(l) + "e", Family::xz, l, false, true});
        }
        return v;
    }();
    return entries;
}

const Compressor& compressor(std::string_view id)
{
    for (const auto& c : catalog())
        if (c.id == id) return c;
    throw std::invalid_argument("unknown compressor '" + std::string(id) + "'");
}

// --- gzip ---------------------------------------------------------------------

Bytes encode_gzip_header(const GzipHeader& h)
{
    Bytes out{0x1f, 0x8b, 8, h.flags};
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(h.mtime >> (8 * i)));
    out.push_back(h.extra_flags);
    out.push_back(h.os);
    if (h.flags & kFExtra) {
        const std::string& x = h.extra.value_or(std::string());
        out.push_back(static_cast<std::uint8_t>(x.size()));
        out.push_back(static_cast<std::uint8_t>(x.size() >> 8));
        out.insert(out.end(), x.begin(), x.end());
    }
    if (h.flags & kFName) {
        const std::string& n = h.file_name.value_or(std::string());
        out.insert(out.end(), n.begin(), n.end());
        out.push_back(0);
    }
    if (h.flags & kFComment) {
        const std::string& c = h.comment.value_or(std::string());
        out.insert(out.end(), c.begin(), c.end());
        out.push_back(0);
    }
    if (h.flags & kFHcrc) {
        std::uint16_t crc = h.header_crc.value_or(static_cast<std::uint16_t>(crc32(out)));
        out.push_back(static_cast<std::uint8_t>(crc));
        out.push_back(static_cast<std::uint8_t>(crc >> 8));
    }
    return out;
}

namespace {

[[noreturn]] void corrupt(const std::string& what)
{
    fail(ErrorKind::CorruptStream, what);
}

std::uint32_t le32(ByteView s, std::size_t at)
{
    return static_cast<std::uint32_t>(s[at]) | static_cast<std::uint32_t>(s[at + 1]) << 8 |
           static_cast<std::uint32_t>(s[at + 2]) << 16 | static_cast<std::uint32_t>(s[at + 3]) << 24;
}

// Inflates raw deflate data from the start of `s`; returns the number of
// bytes consumed.
std::size_t inflate_raw(ByteView s, Bytes& out)
{
    z_stream z{};
    if (inflateInit2(&z, -15) != Z_OK) throw std::runtime_error("inflateInit2 failed");
    std::size_t consumed = 0;
    std::vector<std::uint8_t> buf(1 << 16);
    int rc = Z_OK;
    std::size_t pos = 0;
    while (rc != Z_STREAM_END) {
        if (z.avail_in == 0) {
            if (pos == s.size()) {
                inflateEnd(&z);
                corrupt("gzip member is truncated");
            }
            auto n = std::min<std::size_t>(s.size() - pos, 1u << 30);
            z.next_in = const_cast<Bytef*>(s.data() + pos);
            z.avail_in = static_cast<uInt>(n);
            pos += n;
        }
        z.next_out = buf.data();
        z.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&z, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            std::string msg = z.msg ? z.msg : "inflate failed";
            inflateEnd(&z);
            corrupt("deflate data: " + msg);
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - z.avail_out));
    }
    consumed = pos - z.avail_in;
    inflateEnd(&z);
    return consumed;
}

std::string c_string(ByteView s, std::size_t& pos)
{
    auto start = pos;
    while (pos < s.size() && s[pos] != 0) ++pos;
    if (pos == s.size()) corrupt("unterminated gzip header string");
    auto str = revive::to_string(s.subspan(start, pos - start));
    ++pos;
    return str;
}

} // namespace

std::vector<GzipMember> parse_gzip(ByteView s)
{
    std::vector<GzipMember> members;
    std::size_t pos = 0;
    do {
        if (s.size() - pos < 18) corrupt("gzip member is truncated");
        if (s[pos] != 0x1f || s[pos + 1] != 0x8b) corrupt("trailing data after gzip member");
        if (s[pos + 2] != 8) corrupt("unsupported gzip compression method");
        GzipMember m;
        auto& h = m.header;
        auto start = pos;
        h.flags = s[pos + 3];
        if (h.flags & 0xe0) corrupt("reserved gzip flag bits set");
        h.mtime = le32(s, pos + 4);
        h.extra_flags = s[pos + 8];
        h.os = s[pos + 9];
        pos += 10;
        if (h.flags & kFExtra) {
            if (s.size() - pos < 2) corrupt("gzip header is truncated");
            std::size_t xlen = s[pos] | static_cast<std::size_t>(s[pos + 1]) << 8;
            pos += 2;
            if (s.size() - pos < xlen) corrupt("gzip header is truncated");
            h.extra = revive::to_string(s.subspan(pos, xlen));
            pos += xlen;
        }
        if (h.flags & kFName) h.file_name = c_string(s, pos);
        if (h.flags & kFComment) h.comment = c_string(s, pos);
        if (h.flags & kFHcrc) {
            if (s.size() - pos < 2) corrupt("gzip header is truncated");
            h.header_crc = static_cast<std::uint16_t>(s[pos] | s[pos + 1] << 8);
            auto expect = static_cast<std::uint16_t>(crc32(s.subspan(start, pos - start)));
            if (*h.header_crc != expect) corrupt("gzip header CRC mismatch");
            pos += 2;
        }
        auto used = inflate_raw(s.subspan(pos), m.payload);
        m.body.assign(s.begin() + static_cast<std::ptrdiff_t>(pos), s.begin() + static_cast<std::ptrdiff_t>(pos + used));
        pos += used;
        if (s.size() - pos < 8) corrupt("gzip footer is truncated");
        m.footer.crc = le32(s, pos);
        m.footer.isize = le32(s, pos + 4);
        pos += 8;
        if (m.footer.crc != crc32(m.payload)) corrupt("gzip CRC-32 mismatch");
        if (m.footer.isize != static_cast<std::uint32_t>(m.payload.size())) corrupt("gzip size mismatch");
        members.push_back(std::move(m));
    } while (pos < s.size());
    return members;
}

namespace {

class ZlibDeflater {
public:
    explicit ZlibDeflater(int level)
    {
        if (deflateInit2(&z_, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
            throw std::runtime_error("deflateInit2 failed");
    }
    ~ZlibDeflater() { deflateEnd(&z_); }
    ZlibDeflater(const ZlibDeflater&) = delete;
    ZlibDeflater& operator=(const ZlibDeflater&) = delete;

    // Feeds `in`; appends produced output to `out`.
    void feed(ByteView in, bool finish, Bytes& out)
    {
        z_.next_in = const_cast<Bytef*>(in.data());
        z_.avail_in = static_cast<uInt>(in.size());
        std::uint8_t buf[1 << 15];
        int rc;
        do {
            z_.next_out = buf;
            z_.avail_out = sizeof buf;
            rc = deflate(&z_, finish ? Z_FINISH : Z_NO_FLUSH);
            if (rc == Z_STREAM_ERROR) throw std::runtime_error("deflate failed");
            out.insert(out.end(), buf, buf + (sizeof buf - z_.avail_out));
        } while (z_.avail_out == 0 || (finish && rc != Z_STREAM_END));
    }

private:
    z_stream z_{};
};

constexpr std::size_t kChunk = 1 << 16;

Bytes zlib_deflate(ByteView payload, int level)
{
    ZlibDeflater d(level);
    Bytes out;
    std::size_t pos = 0;
    do {
        auto n = std::min(kChunk, payload.size() - pos);
        d.feed(payload.subspan(pos, n), pos + n == payload.size(), out);
        pos += n;
    } while (pos < payload.size());
    return out;
}

bool zlib_reproduces(ByteView payload, ByteView expected, int level)
{
    ZlibDeflater d(level);
    Bytes out;
    std::size_t pos = 0;
    do {
        auto n = std::min(kChunk, payload.size() - pos);
        d.feed(payload.subspan(pos, n), pos + n == payload.size(), out);
        pos += n;
        if (out.size() > expected.size() || !std::equal(out.begin(), out.end(), expected.begin())) return false;
    } while (pos < payload.size());
    return out.size() == expected.size();
}

bool deflate_reproduces(ByteView payload, ByteView body, const Compressor& c)
{
    if (c.family == Family::gnu) return gnu_deflate_reproduces(payload, body, c.level, c.rsyncable);
    return zlib_reproduces(payload, body, c.level);
}

} // namespace

Bytes deflate_raw(ByteView payload, const Compressor& c)
{
    switch (c.family) {
    case Family::gnu: return gnu_deflate(payload, c.level, c.rsyncable);
    case Family::zlib: return zlib_deflate(payload, c.level);
    default: throw std::invalid_argument(c.id + " is not a deflate compressor");
    }
}

Bytes gzip_member(ByteView payload, const Compressor& c, const GzipHeader& header)
{
    Bytes out = encode_gzip_header(header);
    Bytes body = deflate_raw(payload, c);
    out.insert(out.end(), body.begin(), body.end());
    auto crc = crc32(payload);
    auto size = static_cast<std::uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(size >> (8 * i)));
    return out;
}

// --- bzip2 / xz -------------------------------------------------------------------

std::string_view to_string(XzCheck c)
{
    switch (c) {
    case XzCheck::none: return "none";
    case XzCheck::crc32: return "crc32";
    case XzCheck::crc64: return "crc64";
    case XzCheck::sha256: return "sha256";
    }
    return "?";
}

XzCheck xz_check_from_string(std::string_view s)
{
    if (s == "none") return XzCheck::none;
    if (s == "crc32") return XzCheck::crc32;
    if (s == "crc64") return XzCheck::crc64;
    if (s == "sha256") return XzCheck::sha256;
    throw std::invalid_argument("unknown xz check '" + std::string(s) + "'");
}

Bytes bzip2_decompress(ByteView s, Bzip2Info* info)
{
    if (s.size() < 4 || s[0] != 'B' || s[1] != 'Z' || s[2] != 'h' || s[3] < '1' || s[3] > '9')
        corrupt("not a bzip2 stream");
    Bzip2Info local;
    local.block_size = s[3] - '0';
    local.streams = 0;
    Bytes out;
    std::vector<char> buf(1 << 16);
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (s.size() - pos < 4 || s[pos] != 'B' || s[pos + 1] != 'Z' || s[pos + 2] != 'h')
            corrupt("trailing data after bzip2 stream");
        bz_stream z{};
        if (BZ2_bzDecompressInit(&z, 0, 0) != BZ_OK) throw std::runtime_error("BZ2_bzDecompressInit failed");
        z.next_in = const_cast<char*>(reinterpret_cast<const char*>(s.data() + pos));
        z.avail_in = static_cast<unsigned>(std::min<std::size_t>(s.size() - pos, 1u << 30));
        auto avail_start = z.avail_in;
        int rc;
        do {
            z.next_out = buf.data();
            z.avail_out = static_cast<unsigned>(buf.size());
            rc = BZ2_bzDecompress(&z);
            if (rc != BZ_OK && rc != BZ_STREAM_END) {
                BZ2_bzDecompressEnd(&z);
                corrupt("bzip2 data error (" + std::to_string(rc) + ")");
            }
            out.insert(out.end(), buf.data(), buf.data() + (buf.size() - z.avail_out));
            if (rc == BZ_OK && z.avail_in == 0 && z.avail_out != 0) {
                BZ2_bzDecompressEnd(&z);
                corrupt("bzip2 stream is truncated");
            }
        } while (rc != BZ_STREAM_END);
        pos += avail_start - z.avail_in;
        BZ2_bzDecompressEnd(&z);
        ++local.streams;
    }
    if (info) *info = local;
    return out;
}

Bytes bzip2_compress(ByteView payload, int level)
{
    bz_stream z{};
    if (BZ2_bzCompressInit(&z, level, 0, 30) != BZ_OK) throw std::runtime_error("BZ2_bzCompressInit failed");
    Bytes out;
    std::vector<char> buf(1 << 16);
    std::size_t pos = 0;
    int rc;
    do {
        if (z.avail_in == 0 && pos < payload.size()) {
            auto n = std::min<std::size_t>(payload.size() - pos, 1u << 30);
            z.next_in = const_cast<char*>(reinterpret_cast<const char*>(payload.data() + pos));
            z.avail_in = static_cast<unsigned>(n);
            pos += n;
        }
        z.next_out = buf.data();
        z.avail_out = static_cast<unsigned>(buf.size());
        rc = BZ2_bzCompress(&z, pos == payload.size() ? BZ_FINISH : BZ_RUN);
        if (rc < 0) {
            BZ2_bzCompressEnd(&z);
            throw std::runtime_error("BZ2_bzCompress failed");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - z.avail_out));
    } while (rc != BZ_STREAM_END);
    BZ2_bzCompressEnd(&z);
    return out;
}

namespace {

std::optional<std::uint64_t> varint(ByteView s, std::size_t& pos)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 9; ++i) {
        if (pos >= s.size()) return std::nullopt;
        auto b = s[pos++];
        v |= static_cast<std::uint64_t>(b & 0x7f) << (7 * i);
        if (!(b & 0x80)) return v;
    }
    return std::nullopt;
}

// Dictionary size of the LZMA2 filter in the first block header.
std::optional<std::uint32_t> first_block_dict(ByteView s)
{
    std::size_t pos = 12;
    if (pos >= s.size() || s[pos] == 0) return std::nullopt;
    std::size_t end = pos + (static_cast<std::size_t>(s[pos]) + 1) * 4;
    if (end > s.size()) return std::nullopt;
    auto flags = s[pos + 1];
    pos += 2;
    if (flags & 0x40 && !varint(s, pos)) return std::nullopt;
    if (flags & 0x80 && !varint(s, pos)) return std::nullopt;
    int filters = (flags & 3) + 1;
    for (int i = 0; i < filters; ++i) {
        auto id = varint(s, pos);
        auto size = varint(s, pos);
        if (!id || !size || pos + *size > end) return std::nullopt;
        if (*id == 0x21 && *size == 1) {
            auto bits = s[pos] & 0x3f;
            if (bits > 40) return std::nullopt;
            if (bits == 40) return 0xFFFFFFFFu;
            std::uint32_t d = 2 | (bits & 1);
            return d << (bits / 2 + 11);
        }
        pos += *size;
    }
    return std::nullopt;
}

void xz_structure(ByteView s, XzInfo& info)
{
    info.check = static_cast<XzCheck>(s[7] & 0x0f);
    info.dict_size = first_block_dict(s);
    info.streams = 0;
    info.blocks = 0;
    // Walk streams backwards from the end using their indexes.
    std::size_t end = s.size();
    while (end > 0) {
        while (end >= 4 && s[end - 1] == 0 && s[end - 2] == 0 && s[end - 3] == 0 && s[end - 4] == 0) end -= 4;
        if (end == 0) break;
        if (end < 24) corrupt("xz stream is truncated");
        lzma_stream_flags footer;
        if (lzma_stream_footer_decode(&footer, s.data() + end - 12) != LZMA_OK) corrupt("bad xz stream footer");
        auto index_size = footer.backward_size;
        if (index_size + 12 > end) corrupt("bad xz index size");
        lzma_index* idx = nullptr;
        std::uint64_t memlimit = UINT64_MAX;
        std::size_t in_pos = 0;
        if (lzma_index_buffer_decode(&idx, &memlimit, nullptr, s.data() + end - 12 - index_size, &in_pos,
                                     index_size) != LZMA_OK)
            corrupt("bad xz index");
        auto stream_size = lzma_index_stream_size(idx);
        info.blocks += lzma_index_block_count(idx);
        lzma_index_end(idx, nullptr);
        if (stream_size > end) corrupt("bad xz index");
        end -= stream_size;
        ++info.streams;
    }
}

} // namespace

Bytes xz_decompress(ByteView s, XzInfo* info)
{
    if (s.size() < 12) corrupt("xz stream is truncated");
    lzma_stream z = LZMA_STREAM_INIT;
    if (lzma_stream_decoder(&z, UINT64_MAX, LZMA_CONCATENATED) != LZMA_OK)
        throw std::runtime_error("lzma_stream_decoder failed");
    Bytes out;
    std::vector<std::uint8_t> buf(1 << 16);
    z.next_in = s.data();
    z.avail_in = s.size();
    lzma_ret rc;
    do {
        z.next_out = buf.data();
        z.avail_out = buf.size();
        rc = lzma_code(&z, LZMA_FINISH);
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - z.avail_out));
    } while (rc == LZMA_OK);
    lzma_end(&z);
    if (rc != LZMA_STREAM_END) corrupt("xz data error (" + std::to_string(static_cast<int>(rc)) + ")");
    if (info) xz_structure(s, *info);
    return out;
}

Bytes xz_compress(ByteView payload, int preset, bool extreme, XzCheck check)
{
    std::uint32_t p = static_cast<std::uint32_t>(preset) | (extreme ? LZMA_PRESET_EXTREME : 0);
    lzma_stream strm = LZMA_STREAM_INIT;
    if (lzma_easy_encoder(&strm, p, static_cast<lzma_check>(check)) != LZMA_OK)
        throw std::runtime_error("lzma_easy_encoder failed");
    Bytes out(lzma_stream_buffer_bound(payload.size()));
    strm.next_in = payload.data();
    strm.avail_in = payload.size();
    strm.next_out = out.data();
    strm.avail_out = out.size();
    auto rc = lzma_code(&strm, LZMA_FINISH);
    std::size_t produced = strm.total_out;
    lzma_end(&strm);
    if (rc != LZMA_STREAM_END) throw std::runtime_error("lzma_code failed");
    out.resize(produced);
    return out;
}

// --- generic ----------------------------------------------------------------------

Decompressed decompress(ByteView stream)
{
    Decompressed d;
    d.format = detect_format(stream);
    switch (d.format) {
    case Format::plain:
        d.payload.assign(stream.begin(), stream.end());
        break;
    case Format::gzip:
        d.members = parse_gzip(stream);
        for (const auto& m : d.members) d.payload.insert(d.payload.end(), m.payload.begin(), m.payload.end());
        break;
    case Format::bzip2:
        d.payload = bzip2_decompress(stream, &d.bzip2);
        break;
    case Format::xz:
        d.payload = xz_decompress(stream, &d.xz);
        break;
    }
    return d;
}

Bytes recompress(ByteView payload, const Compressor& c, const GzipHeader& header, XzCheck check)
{
    switch (c.family) {
    case Family::gnu:
    case Family::zlib: return gzip_member(payload, c, header);
    case Family::bzip2: return bzip2_compress(payload, c.level);
    case Family::xz: return xz_compress(payload, c.level, c.extreme, check);
    }
    throw std::invalid_argument("bad compressor family");
}

namespace {

constexpr std::uint32_t kXzPresetDict[10] = {1u << 18, 1u << 20, 1u << 21, 1u << 22, 1u << 22,
                                             1u << 23, 1u << 23, 1u << 24, 1u << 25, 1u << 26};

void push_unique(std::vector<const Compressor*>& v, const Compressor& c)
{
    if (std::find(v.begin(), v.end(), &c) == v.end()) v.push_back(&c);
}

} // namespace

std::vector<const Compressor*> search_order(Format format, std::uint8_t xfl, std::optional<int> bzip2_block_size,
                                            std::optional<std::uint32_t> xz_dict_size)
{
    std::vector<const Compressor*> order;
    switch (format) {
    case Format::gzip: {
        std::vector<const Compressor*> base;
        push_unique(base, compressor("gnu-9"));
        push_unique(base, compressor("gnu-best-rsync"));
        for (int l = 8; l >= 1; --l) push_unique(base, compressor("gnu-" + std::to_string(l)));
        for (int l = 9; l >= 1; --l) push_unique(base, compressor("zlib-" + std::to_string(l)));
        if (xfl == 2)
            for (const char* id : {"gnu-9", "gnu-best-rsync", "zlib-9"}) push_unique(order, compressor(id));
        else if (xfl == 4)
            for (const char* id : {"gnu-1", "zlib-1"}) push_unique(order, compressor(id));
        for (auto* c : base) push_unique(order, *c);
        break;
    }
    case Format::bzip2:
        if (bzip2_block_size) push_unique(order, compressor("bzip2-" + std::to_string(*bzip2_block_size)));
        for (int l = 9; l >= 1; --l) push_unique(order, compressor("bzip2-" + std::to_string(l)));
        break;
    case Format::xz: {
        std::vector<int> levels{6, 9, 0, 1, 2, 3, 4, 5, 7, 8};
        if (xz_dict_size)
            for (int l : levels)
                if (kXzPresetDict[l] == *xz_dict_size) {
                    push_unique(order, compressor("xz-" + std::to_string(l)));
                    push_unique(order, compressor("xz-" + std::to_string(l) + "e"));
                }
        for (int l : levels) {
            push_unique(order, compressor("xz-" + std::to_string(l)));
            push_unique(order, compressor("xz-" + std::to_string(l) + "e"));
        }
        break;
    }
    case Format::plain:
        break;
    }
    return order;
}

std::optional<Compressor> guess_deflate(ByteView payload, ByteView body, std::uint8_t xfl)
{
    for (const auto* c : search_order(Format::gzip, xfl))
        if (deflate_reproduces(payload, body, *c)) return *c;
    return std::nullopt;
}

Compressor guess_compressor(ByteView payload, ByteView original)
{
    auto format = detect_format(original);
    switch (format) {
    case Format::gzip: {
        auto members = parse_gzip(original);
        if (members.size() != 1)
            fail(ErrorKind::NoMatchingCompressor, "multi-member gzip streams are guessed member by member");
        if (auto c = guess_deflate(payload, members[0].body, members[0].header.extra_flags)) return *c;
        break;
    }
    case Format::bzip2: {
        Bzip2Info info;
        bzip2_decompress(original, &info);
        if (info.streams != 1) fail(ErrorKind::NoMatchingCompressor, "multi-stream bzip2 files are not reproducible");
        for (const auto* c : search_order(format, 0, info.block_size))
            if (bzip2_compress(payload, c->level) == Bytes(original.begin(), original.end())) return *c;
        break;
    }
    case Format::xz: {
        XzInfo info;
        xz_decompress(original, &info);
        if (info.streams != 1 || info.blocks > 1)
            fail(ErrorKind::NoMatchingCompressor, "multi-block xz files are not reproducible");
        for (const auto* c : search_order(format, 0, std::nullopt, info.dict_size)) {
            auto out = xz_compress(payload, c->level, c->extreme, info.check);
            if (std::equal(out.begin(), out.end(), original.begin(), original.end())) return *c;
        }
        break;
    }
    case Format::plain:
        fail(ErrorKind::UnknownFormat, "stream is not compressed");
    }
    fail(ErrorKind::NoMatchingCompressor, "no catalog entry reproduces the " + std::string(to_string(format)) + " stream");
}

} // namespace revive::compress
