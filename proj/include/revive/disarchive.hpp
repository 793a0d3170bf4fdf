#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>

#include "revive/description.hpp"
#include "revive/transport.hpp"

namespace revive {

struct Disassembly {
    Description description;
    /// The tree a DirectoryRef points to, or a regular node for a ContentRef.
    NarNode content;
};

/// Splits a (compressed) tarball or bare file into a description and its
/// contents. Errors carry the layer index (0 = the file itself).
Disassembly disassemble(ByteView file, std::string name);
Disassembly disassemble_file(const std::filesystem::path& path);

/// Name of the payload inside a compressed file: `x.tar.gz` -> `x.tar`,
/// `x.tgz` -> `x.tar`.
std::string inner_name(std::string_view outer, compress::Format format);

/// Supplies the content a description leaf points to. Implementations
/// must be safe to call concurrently.
class ContentProvider {
public:
    virtual ~ContentProvider() = default;
    /// Throws Error(ContentUnavailable).
    virtual NarNode fetch(const ContentLeaf& leaf) = 0;
};

/// Reads DIR/<name> (DIR itself for an unnamed directory reference).
class LocalContentProvider : public ContentProvider {
public:
    explicit LocalContentProvider(std::filesystem::path root) : root_(std::move(root)) {}
    NarNode fetch(const ContentLeaf& leaf) override;

private:
    std::filesystem::path root_;
};

/// In-memory store keyed by content digest.
class MemoryContentProvider : public ContentProvider {
public:
    void add(const ContentLeaf& leaf, NarNode content);
    NarNode fetch(const ContentLeaf& leaf) override;

private:
    std::mutex mutex_;
    std::map<std::string, NarNode> store_;
};

/// Writes the content of `d` under `dir` the way LocalContentProvider
/// reads it back.
void write_content(const Disassembly& d, const std::filesystem::path& dir);

/// Rebuilds the outermost artifact. The content is checked against the
/// leaf digest first (ContentDigestMismatch) and every reconstructed layer
/// against its recorded digest (ReconstructionMismatch).
Bytes assemble(const Description& desc, ContentProvider& provider);

class DescriptionDb {
public:
    virtual ~DescriptionDb() = default;
    /// Throws Error(NotFound) or Error(MalformedDescription).
    virtual Description lookup(const Sha256Digest& digest) = 0;
};

/// `ROOT/sha256/ab/cdef....sexp`.
class LocalDescriptionDb : public DescriptionDb {
public:
    explicit LocalDescriptionDb(std::filesystem::path root) : root_(std::move(root)) {}
    Description lookup(const Sha256Digest& digest) override;
    void store(const Description& desc);
    std::filesystem::path path_for(const Sha256Digest& digest) const;

private:
    std::filesystem::path root_;
};

/// `BASE/sha256/<hex>` over HTTP.
class RemoteDescriptionDb : public DescriptionDb {
public:
    RemoteDescriptionDb(std::string base_url, Transport& transport);
    Description lookup(const Sha256Digest& digest) override;

private:
    std::string base_url_;
    Transport& transport_;
};

/// Looks up `digest` and checks the description actually describes it.
Description description_db_lookup(const Sha256Digest& digest, DescriptionDb& db);

} // namespace revive
