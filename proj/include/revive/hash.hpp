#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "revive/bytes.hpp"

namespace revive {

using Sha256Digest = std::array<std::uint8_t, 32>;
using Sha1Digest = std::array<std::uint8_t, 20>;

/// Incremental hash over OpenSSL's EVP interface.
class Hasher {
public:
    enum class Algorithm { sha1, sha256 };

    explicit Hasher(Algorithm algorithm);
    ~Hasher();
    Hasher(Hasher&&) noexcept;
    Hasher& operator=(Hasher&&) noexcept;
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;

    void update(ByteView data);
    void update(std::string_view data) { update(as_bytes(data)); }
    Bytes finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Sha256Digest sha256(ByteView data);
Sha1Digest sha1(ByteView data);

inline Sha256Digest sha256(std::string_view s) { return sha256(as_bytes(s)); }

std::uint32_t crc32(ByteView data, std::uint32_t seed = 0);

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& digest)
{
    return to_hex(ByteView(digest.data(), digest.size()));
}

/// Parses exactly 2*N hex characters; throws std::invalid_argument otherwise.
template <std::size_t N>
std::array<std::uint8_t, N> digest_from_hex(std::string_view hex)
{
    auto bytes = from_hex(hex);
    if (bytes.size() != N)
        throw std::invalid_argument("digest has wrong length: " + std::string(hex));
    std::array<std::uint8_t, N> out{};
    std::copy(bytes.begin(), bytes.end(), out.begin());
    return out;
}

} // namespace revive
