#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "revive/compress.hpp"
#include "revive/nar.hpp"
#include "revive/sexpr.hpp"
#include "revive/swhid.hpp"
#include "revive/tar.hpp"

namespace revive {

/// Pointer to the extracted contents of a tarball.
struct DirectoryRef {
    int version = 0;
    /// Top-level directory name; empty when the archive has no single root
    /// directory and the reference designates the extraction root itself.
    std::string name;
    std::vector<Swhid> addresses;
    NarDigest digest;

    friend bool operator==(const DirectoryRef&, const DirectoryRef&) = default;
};

/// Pointer to a bare file (a compressed patch, a plain file, ...).
struct ContentRef {
    int version = 0;
    std::string name;
    std::vector<Swhid> addresses;
    Sha256Digest digest{};

    friend bool operator==(const ContentRef&, const ContentRef&) = default;
};

using ContentLeaf = std::variant<DirectoryRef, ContentRef>;

struct GzipMemberSpec {
    compress::GzipHeader header;
    compress::GzipFooter footer;
    std::string compressor;

    friend bool operator==(const GzipMemberSpec&, const GzipMemberSpec&) = default;
};

struct CompressionLayer {
    compress::Format format = compress::Format::gzip;
    std::string name;
    Sha256Digest digest{};
    /// gzip: one entry per member.
    std::vector<GzipMemberSpec> members;
    /// bzip2 / xz.
    std::string compressor;
    compress::XzCheck check = compress::XzCheck::crc64;

    friend bool operator==(const CompressionLayer&, const CompressionLayer&) = default;
};

struct Description {
    int version = 0;
    std::optional<CompressionLayer> compression;
    std::optional<tar::TarballSpec> tarball;
    ContentLeaf leaf;

    /// Digest of the outermost artifact.
    const Sha256Digest& digest() const;
    /// File name of the outermost artifact.
    const std::string& name() const;

    friend bool operator==(const Description&, const Description&) = default;
};

sexpr::Value to_sexpr(const Description& d);
/// Throws Error(MalformedDescription).
Description description_from_sexpr(const sexpr::Value& v);

std::string write_description(const Description& d, bool pretty = true);
/// Parses description text. Throws Error(MalformedDescription).
Description read_description(std::string_view text);

} // namespace revive
