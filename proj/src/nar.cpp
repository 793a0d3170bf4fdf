#include "revive/nar.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include <sys/stat.h>

#include "revive/encoding.hpp"
#include "revive/error.hpp"

namespace fs = std::filesystem;

namespace revive {

NarNode NarNode::regular(Bytes contents, bool executable)
{
    NarNode n;
    n.kind_ = Kind::regular;
    n.contents_ = std::move(contents);
    n.executable_ = executable;
    return n;
}

NarNode NarNode::directory()
{
    return NarNode{};
}

NarNode NarNode::symlink(std::string target)
{
    NarNode n;
    n.kind_ = Kind::symlink;
    n.target_ = std::move(target);
    return n;
}

namespace {

bool entry_less(const NarNode::Entry& e, std::string_view name)
{
    return std::string_view(e.first) < name;
}

void check_name(std::string_view name)
{
    if (name.empty() || name == "." || name == ".." || name.find('/') != std::string_view::npos ||
        name.find('\0') != std::string_view::npos)
        throw std::invalid_argument("invalid directory entry name: '" + std::string(name) + "'");
}

} // namespace

const NarNode* NarNode::find(std::string_view name) const
{
    auto it = std::lower_bound(entries_.begin(), entries_.end(), name, entry_less);
    if (it == entries_.end() || it->first != name) return nullptr;
    return &it->second;
}

NarNode* NarNode::find(std::string_view name)
{
    return const_cast<NarNode*>(std::as_const(*this).find(name));
}

NarNode& NarNode::set(std::string name, NarNode child)
{
    if (!is_directory()) throw std::logic_error("set() on a non-directory node");
    check_name(name);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::string_view(name), entry_less);
    if (it != entries_.end() && it->first == name) {
        it->second = std::move(child);
        return it->second;
    }
    return entries_.emplace(it, std::move(name), std::move(child))->second;
}

bool NarNode::erase(std::string_view name)
{
    auto it = std::lower_bound(entries_.begin(), entries_.end(), name, entry_less);
    if (it == entries_.end() || it->first != name) return false;
    entries_.erase(it);
    return true;
}

const NarNode* NarNode::lookup(std::string_view path) const
{
    const NarNode* node = this;
    while (!path.empty()) {
        auto slash = path.find('/');
        auto part = path.substr(0, slash);
        path = slash == std::string_view::npos ? std::string_view{} : path.substr(slash + 1);
        if (part.empty()) continue;
        if (!node->is_directory()) return nullptr;
        node = node->find(part);
        if (!node) return nullptr;
    }
    return node;
}

std::string NarDigest::base32() const
{
    return nix_base32_encode(ByteView(bytes.data(), bytes.size()));
}

NarDigest NarDigest::from_hex(std::string_view hex)
{
    return NarDigest{digest_from_hex<32>(hex)};
}

NarDigest NarDigest::from_base32(std::string_view text)
{
    auto raw = nix_base32_decode(text);
    if (raw.size() != 32) throw std::invalid_argument("base32 digest has wrong length");
    NarDigest d;
    std::copy(raw.begin(), raw.end(), d.bytes.begin());
    return d;
}

// --- serialization -------------------------------------------------------------

namespace {

class NarWriter {
public:
    explicit NarWriter(const ByteSink& sink) : sink_(sink) {}

    void str(std::string_view s) { bytes(as_bytes(s)); }

    void bytes(ByteView data)
    {
        u64(data.size());
        if (!data.empty()) sink_(data);
        static constexpr std::array<std::uint8_t, 8> zeros{};
        if (auto rem = data.size() % 8; rem != 0) sink_(ByteView(zeros.data(), 8 - rem));
    }

    void node(const NarNode& n)
    {
        str("(");
        str("type");
        switch (n.kind()) {
        case NarNode::Kind::regular:
            str("regular");
            if (n.executable()) {
                str("executable");
                str("");
            }
            str("contents");
            bytes(n.contents());
            break;
        case NarNode::Kind::symlink:
            str("symlink");
            str("target");
            str(n.target());
            break;
        case NarNode::Kind::directory:
            str("directory");
            for (const auto& [name, child] : n.entries()) {
                str("entry");
                str("(");
                str("name");
                str(name);
                str("node");
                node(child);
                str(")");
            }
            break;
        }
        str(")");
    }

private:
    void u64(std::uint64_t v)
    {
        std::array<std::uint8_t, 8> buf{};
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
        sink_(ByteView(buf.data(), buf.size()));
    }

    const ByteSink& sink_;
};

} // namespace

void nar_serialize(const NarNode& tree, const ByteSink& sink)
{
    NarWriter w(sink);
    w.str("nix-archive-1");
    w.node(tree);
}

Bytes nar_serialize(const NarNode& tree)
{
    Bytes out;
    nar_serialize(tree, [&](ByteView b) { out.insert(out.end(), b.begin(), b.end()); });
    return out;
}

NarDigest nar_hash(const NarNode& tree)
{
    Hasher h(Hasher::Algorithm::sha256);
    nar_serialize(tree, [&](ByteView b) { h.update(b); });
    auto raw = h.finish();
    NarDigest d;
    std::copy(raw.begin(), raw.end(), d.bytes.begin());
    return d;
}

// --- disk I/O ----------------------------------------------------------------

namespace {

bool excluded(const std::string& name, const TreeFilter& filter)
{
    if (filter.exclude_vcs && (name == ".git" || name == ".svn" || name == ".hg")) return true;
    return std::find(filter.exclude_names.begin(), filter.exclude_names.end(), name) != filter.exclude_names.end();
}

NarNode read_node(const fs::path& path, const TreeFilter& filter)
{
    struct stat st {};
    if (::lstat(path.c_str(), &st) != 0)
        fail(ErrorKind::UnreadableEntry, path.string() + ": " + std::generic_category().message(errno));

    if (S_ISLNK(st.st_mode)) {
        std::error_code ec;
        auto target = fs::read_symlink(path, ec);
        if (ec) fail(ErrorKind::UnreadableEntry, path.string() + ": " + ec.message());
        return NarNode::symlink(target.string());
    }
    if (S_ISREG(st.st_mode)) {
        std::ifstream in(path, std::ios::binary);
        if (!in) fail(ErrorKind::UnreadableEntry, path.string() + ": cannot open");
        Bytes data(static_cast<std::size_t>(st.st_size));
        if (!data.empty()) in.read(reinterpret_cast<char*>(data.data()), st.st_size);
        if (!in) fail(ErrorKind::UnreadableEntry, path.string() + ": short read");
        return NarNode::regular(std::move(data), (st.st_mode & 0111) != 0);
    }
    if (S_ISDIR(st.st_mode)) {
        NarNode dir = NarNode::directory();
        std::error_code ec;
        fs::directory_iterator it(path, ec);
        if (ec) fail(ErrorKind::UnreadableEntry, path.string() + ": " + ec.message());
        for (const auto& entry : it) {
            auto name = entry.path().filename().string();
            if (excluded(name, filter)) continue;
            dir.set(name, read_node(entry.path(), filter));
        }
        return dir;
    }
    fail(ErrorKind::UnsupportedNodeType, path.string() + ": not a regular file, directory or symlink");
}

} // namespace

NarNode tree_from_disk(const fs::path& path, const TreeFilter& filter)
{
    return read_node(path, filter);
}

void tree_to_disk(const NarNode& tree, const fs::path& path)
{
    switch (tree.kind()) {
    case NarNode::Kind::regular: {
        write_file(path.string(), tree.contents());
        fs::permissions(path,
                        tree.executable() ? fs::perms(0755) : fs::perms(0644),
                        fs::perm_options::replace);
        break;
    }
    case NarNode::Kind::symlink:
        fs::create_symlink(tree.target(), path);
        break;
    case NarNode::Kind::directory:
        fs::create_directory(path);
        for (const auto& [name, child] : tree.entries()) tree_to_disk(child, path / name);
        break;
    }
}

} // namespace revive
