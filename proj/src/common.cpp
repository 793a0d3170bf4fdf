#include <fstream>
#include <iterator>
#include <stdexcept>

#include <openssl/evp.h>
#include <zlib.h>

#include "revive/bytes.hpp"
#include "revive/encoding.hpp"
#include "revive/error.hpp"
#include "revive/hash.hpp"

namespace revive {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::string to_hex(ByteView data)
{
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xf]);
    }
    return out;
}

bool is_hex(std::string_view s)
{
    for (char c : s)
        if (hex_value(c) < 0) return false;
    return true;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]), lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

Bytes read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::UnreadableEntry, "cannot open " + path);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, ByteView data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::UnbalancedParens: return "UnbalancedParens";
    case ErrorKind::InvalidEscape: return "InvalidEscape";
    case ErrorKind::InvalidToken: return "InvalidToken";
    case ErrorKind::TrailingGarbage: return "TrailingGarbage";
    case ErrorKind::TruncatedArchive: return "TruncatedArchive";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::UnsupportedMemberType: return "UnsupportedMemberType";
    case ErrorKind::MissingContent: return "MissingContent";
    case ErrorKind::DigestMismatch: return "DigestMismatch";
    case ErrorKind::CorruptStream: return "CorruptStream";
    case ErrorKind::UnknownFormat: return "UnknownFormat";
    case ErrorKind::NoMatchingCompressor: return "NoMatchingCompressor";
    case ErrorKind::UnreadableEntry: return "UnreadableEntry";
    case ErrorKind::UnsupportedNodeType: return "UnsupportedNodeType";
    case ErrorKind::MalformedSwhid: return "MalformedSwhid";
    case ErrorKind::ContentUnavailable: return "ContentUnavailable";
    case ErrorKind::ContentDigestMismatch: return "ContentDigestMismatch";
    case ErrorKind::ReconstructionMismatch: return "ReconstructionMismatch";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::MalformedDescription: return "MalformedDescription";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::AuthRequired: return "AuthRequired";
    case ErrorKind::CookingFailed: return "CookingFailed";
    case ErrorKind::DeadlineExceeded: return "DeadlineExceeded";
    case ErrorKind::Rejected: return "Rejected";
    case ErrorKind::OriginNotFound: return "OriginNotFound";
    case ErrorKind::TagNotFound: return "TagNotFound";
    case ErrorKind::AllPathsFailed: return "AllPathsFailed";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::UnsupportedCombination: return "UnsupportedCombination";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
    }
    return "Unknown";
}

// --- hashing ---------------------------------------------------------------

struct Hasher::Impl {
    EVP_MD_CTX* ctx = nullptr;
    ~Impl() { EVP_MD_CTX_free(ctx); }
};

Hasher::Hasher(Algorithm algorithm) : impl_(std::make_unique<Impl>())
{
    impl_->ctx = EVP_MD_CTX_new();
    const EVP_MD* md = algorithm == Algorithm::sha1 ? EVP_sha1() : EVP_sha256();
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx, md, nullptr) != 1)
        throw std::runtime_error("EVP_DigestInit_ex failed");
}

Hasher::~Hasher() = default;
Hasher::Hasher(Hasher&&) noexcept = default;
Hasher& Hasher::operator=(Hasher&&) noexcept = default;

void Hasher::update(ByteView data)
{
    if (!data.empty() && EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1)
        throw std::runtime_error("EVP_DigestUpdate failed");
}

Bytes Hasher::finish()
{
    Bytes out(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(impl_->ctx, out.data(), &len) != 1)
        throw std::runtime_error("EVP_DigestFinal_ex failed");
    out.resize(len);
    return out;
}

Sha256Digest sha256(ByteView data)
{
    Hasher h(Hasher::Algorithm::sha256);
    h.update(data);
    auto raw = h.finish();
    Sha256Digest d{};
    std::copy(raw.begin(), raw.end(), d.begin());
    return d;
}

Sha1Digest sha1(ByteView data)
{
    Hasher h(Hasher::Algorithm::sha1);
    h.update(data);
    auto raw = h.finish();
    Sha1Digest d{};
    std::copy(raw.begin(), raw.end(), d.begin());
    return d;
}

std::uint32_t crc32(ByteView data, std::uint32_t seed)
{
    uLong crc = seed;
    const std::uint8_t* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = ::crc32(crc, p, chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

// --- encodings ---------------------------------------------------------------

namespace {
constexpr std::string_view kNixBase32 = "0123456789abcdfghijklmnpqrsvwxyz";
constexpr std::string_view kBase64 =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
} // namespace

std::string nix_base32_encode(ByteView data)
{
    if (data.empty()) return {};
    std::size_t len = (data.size() * 8 - 1) / 5 + 1;
    std::string out;
    out.reserve(len);
    for (std::size_t n = len; n-- > 0;) {
        std::size_t b = n * 5;
        std::size_t i = b / 8;
        unsigned j = b % 8;
        unsigned c = data[i] >> j;
        if (i + 1 < data.size()) c |= static_cast<unsigned>(data[i + 1]) << (8 - j);
        out.push_back(kNixBase32[c & 0x1f]);
    }
    return out;
}

Bytes nix_base32_decode(std::string_view text)
{
    std::size_t size = text.size() * 5 / 8;
    Bytes out(size, 0);
    for (std::size_t n = 0; n < text.size(); ++n) {
        char c = text[text.size() - n - 1];
        auto digit = kNixBase32.find(c);
        if (digit == std::string_view::npos) throw std::invalid_argument("invalid base32 character");
        std::size_t b = n * 5;
        std::size_t i = b / 8;
        unsigned j = b % 8;
        out[i] |= static_cast<std::uint8_t>(digit << j);
        unsigned carry = static_cast<unsigned>(digit) >> (8 - j);
        if (i + 1 < size) {
            out[i + 1] |= static_cast<std::uint8_t>(carry);
        } else if (carry != 0) {
            throw std::invalid_argument("invalid base32 string (excess bits)");
        }
    }
    return out;
}

std::string base64_encode(ByteView data)
{
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        unsigned v = data[i] << 16 | data[i + 1] << 8 | data[i + 2];
        out.push_back(kBase64[v >> 18 & 63]);
        out.push_back(kBase64[v >> 12 & 63]);
        out.push_back(kBase64[v >> 6 & 63]);
        out.push_back(kBase64[v & 63]);
    }
    if (std::size_t rest = data.size() - i; rest > 0) {
        unsigned v = data[i] << 16 | (rest == 2 ? data[i + 1] << 8 : 0);
        out.push_back(kBase64[v >> 18 & 63]);
        out.push_back(kBase64[v >> 12 & 63]);
        out.push_back(rest == 2 ? kBase64[v >> 6 & 63] : '=');
        out.push_back('=');
    }
    return out;
}

Bytes base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length not a multiple of 4");
    Bytes out;
    unsigned acc = 0;
    int bits = 0;
    std::size_t pad = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '=') {
            if (i < text.size() - 2) throw std::invalid_argument("misplaced base64 padding");
            ++pad;
            continue;
        }
        if (pad) throw std::invalid_argument("data after base64 padding");
        auto v = kBase64.find(c);
        if (v == std::string_view::npos) throw std::invalid_argument("invalid base64 character");
        acc = acc << 6 | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>(acc >> bits & 0xff));
        }
    }
    return out;
}

} // namespace revive
