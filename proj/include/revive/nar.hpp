#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "revive/bytes.hpp"
#include "revive/hash.hpp"

namespace revive {

/// A file-system tree reduced to what the normalized archive keeps: names,
/// file contents, symlink targets and one executable bit per file.
class NarNode {
public:
    enum class Kind { regular, directory, symlink };
    using Entry = std::pair<std::string, NarNode>;

    static NarNode regular(Bytes contents, bool executable = false);
    static NarNode directory();
    static NarNode symlink(std::string target);

    Kind kind() const { return kind_; }
    bool is_regular() const { return kind_ == Kind::regular; }
    bool is_directory() const { return kind_ == Kind::directory; }
    bool is_symlink() const { return kind_ == Kind::symlink; }

    bool executable() const { return executable_; }
    const Bytes& contents() const { return contents_; }
    const std::string& target() const { return target_; }

    /// Directory entries, always sorted by raw byte order of the name.
    const std::vector<Entry>& entries() const { return entries_; }

    const NarNode* find(std::string_view name) const;
    NarNode* find(std::string_view name);

    /// Inserts or replaces an entry. Names must be non-empty, contain no '/'
    /// or NUL and differ from "." and "..".
    NarNode& set(std::string name, NarNode child);
    bool erase(std::string_view name);

    /// Resolves a '/'-separated relative path without following symlinks.
    const NarNode* lookup(std::string_view path) const;

    friend bool operator==(const NarNode&, const NarNode&) = default;

private:
    Kind kind_ = Kind::directory;
    bool executable_ = false;
    Bytes contents_;
    std::string target_;
    std::vector<Entry> entries_;
};

struct NarDigest {
    Sha256Digest bytes{};

    std::string hex() const { return to_hex(bytes); }
    std::string base32() const;
    static NarDigest from_hex(std::string_view hex);
    static NarDigest from_base32(std::string_view text);

    friend bool operator==(const NarDigest&, const NarDigest&) = default;
};

using ByteSink = std::function<void(ByteView)>;

void nar_serialize(const NarNode& tree, const ByteSink& sink);
Bytes nar_serialize(const NarNode& tree);
NarDigest nar_hash(const NarNode& tree);

struct TreeFilter {
    /// Drops `.git`, `.svn` and `.hg` entries at any depth.
    bool exclude_vcs = false;
    /// Additional entry names dropped at any depth.
    std::vector<std::string> exclude_names;
};

/// Reads a tree from disk. A regular file is executable when any execute
/// permission bit is set. Hard links become independent regular files.
NarNode tree_from_disk(const std::filesystem::path& path, const TreeFilter& filter = {});

/// Writes `tree` at `path` (which must not exist). Regular files get mode
/// 0755 or 0644.
void tree_to_disk(const NarNode& tree, const std::filesystem::path& path);

} // namespace revive
