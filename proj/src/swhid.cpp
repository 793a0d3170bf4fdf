#include "revive/swhid.hpp"

#include <algorithm>
#include <optional>
#include <sys/stat.h>

#include "revive/error.hpp"

namespace revive {

std::string_view to_string(SwhidType type)
{
    switch (type) {
    case SwhidType::cnt: return "cnt";
    case SwhidType::dir: return "dir";
    case SwhidType::rev: return "rev";
    case SwhidType::rel: return "rel";
    case SwhidType::snp: return "snp";
    }
    return "?";
}

std::string Swhid::to_string() const
{
    return "swh:1:" + std::string(revive::to_string(type)) + ":" + to_hex(digest);
}

Swhid parse_swhid(std::string_view text)
{
    auto bad = [&](const char* why) -> Swhid {
        fail(ErrorKind::MalformedSwhid, std::string(why) + ": '" + std::string(text) + "'");
    };
    if (text.find(';') != std::string_view::npos) return bad("qualifiers are not supported");
    if (text.size() != 50) return bad("wrong length");
    if (text.substr(0, 4) != "swh:") return bad("missing swh: prefix");
    if (text.substr(4, 2) != "1:") return bad("unsupported scheme version");
    auto type = text.substr(6, 3);
    Swhid id;
    if (type == "cnt") id.type = SwhidType::cnt;
    else if (type == "dir") id.type = SwhidType::dir;
    else if (type == "rev") id.type = SwhidType::rev;
    else if (type == "rel") id.type = SwhidType::rel;
    else if (type == "snp") id.type = SwhidType::snp;
    else return bad("unknown object type");
    if (text[9] != ':') return bad("missing separator");
    auto hex = text.substr(10);
    for (char c : hex)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return bad("digest is not lowercase hex");
    id.digest = digest_from_hex<20>(hex);
    return id;
}

namespace {

Sha1Digest git_object_hash(std::string_view kind, ByteView payload)
{
    Hasher h(Hasher::Algorithm::sha1);
    std::string header = std::string(kind) + " " + std::to_string(payload.size());
    header.push_back('\0');
    h.update(header);
    h.update(payload);
    auto raw = h.finish();
    Sha1Digest d{};
    std::copy(raw.begin(), raw.end(), d.begin());
    return d;
}

std::string_view mode_text(GitTreeEntry::Mode mode)
{
    switch (mode) {
    case GitTreeEntry::Mode::file: return "100644";
    case GitTreeEntry::Mode::executable: return "100755";
    case GitTreeEntry::Mode::symlink: return "120000";
    case GitTreeEntry::Mode::directory: return "40000";
    }
    return "";
}

// Git orders tree entries as if directory names carried a trailing '/'.
std::string sort_key(const GitTreeEntry& e)
{
    return e.mode == GitTreeEntry::Mode::directory ? e.name + "/" : e.name;
}

std::optional<Sha1Digest> tree_id(const NarNode& dir)
{
    std::vector<GitTreeEntry> entries;
    for (const auto& [name, child] : dir.entries()) {
        switch (child.kind()) {
        case NarNode::Kind::regular:
            entries.push_back({child.executable() ? GitTreeEntry::Mode::executable : GitTreeEntry::Mode::file, name,
                               git_object_hash("blob", child.contents())});
            break;
        case NarNode::Kind::symlink:
            entries.push_back({GitTreeEntry::Mode::symlink, name, git_object_hash("blob", as_bytes(child.target()))});
            break;
        case NarNode::Kind::directory:
            if (auto sub = tree_id(child)) entries.push_back({GitTreeEntry::Mode::directory, name, *sub});
            break;
        }
    }
    if (entries.empty()) return std::nullopt;
    return swhid_from_entries(std::move(entries)).digest;
}

} // namespace

Swhid swhid_from_entries(std::vector<GitTreeEntry> entries)
{
    std::sort(entries.begin(), entries.end(),
              [](const GitTreeEntry& a, const GitTreeEntry& b) { return sort_key(a) < sort_key(b); });
    Bytes payload;
    for (const auto& e : entries) {
        auto mode = mode_text(e.mode);
        payload.insert(payload.end(), mode.begin(), mode.end());
        payload.push_back(' ');
        payload.insert(payload.end(), e.name.begin(), e.name.end());
        payload.push_back(0);
        payload.insert(payload.end(), e.id.begin(), e.id.end());
    }
    return Swhid{SwhidType::dir, git_object_hash("tree", payload)};
}

Swhid swhid_for_content(ByteView data)
{
    return Swhid{SwhidType::cnt, git_object_hash("blob", data)};
}

Swhid swhid_for_directory(const NarNode& tree)
{
    if (!tree.is_directory()) fail(ErrorKind::UnsupportedNodeType, "directory SWHID requested for a non-directory");
    if (auto id = tree_id(tree)) return Swhid{SwhidType::dir, *id};
    return swhid_from_entries({});
}

Swhid swhid_for_directory(const std::filesystem::path& path, const TreeFilter& filter)
{
    return swhid_for_directory(tree_from_disk(path, filter));
}

Swhid swhid_for_path(const std::filesystem::path& path, const TreeFilter& filter)
{
    auto node = tree_from_disk(path, filter);
    if (node.is_regular()) return swhid_for_content(node.contents());
    if (node.is_directory()) return swhid_for_directory(node);
    fail(ErrorKind::UnsupportedNodeType, path.string() + ": symlinks have no standalone SWHID here");
}

} // namespace revive
