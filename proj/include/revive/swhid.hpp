#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "revive/bytes.hpp"
#include "revive/hash.hpp"
#include "revive/nar.hpp"

namespace revive {

enum class SwhidType { cnt, dir, rev, rel, snp };

std::string_view to_string(SwhidType type);

/// Core SWHID `swh:1:<type>:<hex>` (no qualifiers).
struct Swhid {
    SwhidType type = SwhidType::cnt;
    Sha1Digest digest{};

    static constexpr int scheme_version = 1;

    std::string to_string() const;

    friend bool operator==(const Swhid&, const Swhid&) = default;
    friend auto operator<=>(const Swhid&, const Swhid&) = default;
};

/// Throws Error(MalformedSwhid).
Swhid parse_swhid(std::string_view text);
inline std::string format_swhid(const Swhid& id) { return id.to_string(); }

/// Git blob hash of `data`.
Swhid swhid_for_content(ByteView data);

/// Git tree hash of a directory. Directories with no files anywhere below
/// them are skipped, as Git cannot represent them; the nar hash keeps them,
/// which is one reason the two identifiers of a tree are not interconvertible.
Swhid swhid_for_directory(const NarNode& tree);
Swhid swhid_for_directory(const std::filesystem::path& path, const TreeFilter& filter = {});

/// cnt for a regular file, dir for a directory. Symlinks are rejected.
Swhid swhid_for_path(const std::filesystem::path& path, const TreeFilter& filter = {});

/// A single Git tree entry, used to compose directory identifiers from the
/// identifiers of their children without re-reading child contents.
struct GitTreeEntry {
    enum class Mode { file, executable, symlink, directory };
    Mode mode;
    std::string name;
    Sha1Digest id;
};

Swhid swhid_from_entries(std::vector<GitTreeEntry> entries);

} // namespace revive
