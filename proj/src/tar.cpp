#include "revive/tar.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <map>
#include <stdexcept>

#include "revive/error.hpp"
#include "tar_fields.hpp"

namespace revive::tar {

using namespace detail;

namespace {

bool all_zero(ByteView b)
{
    return std::all_of(b.begin(), b.end(), [](std::uint8_t c) { return c == 0; });
}

std::string slice(ByteView block, std::size_t offset, std::size_t width)
{
    return to_string(block.subspan(offset, width));
}

std::string octal_digits(std::uint64_t v)
{
    if (v == 0) return "0";
    std::string s;
    while (v) {
        s.push_back(static_cast<char>('0' + (v & 7)));
        v >>= 3;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

// Canonical spelling of `v` followed by `trailer` in a field of `width` bytes.
std::optional<std::string> encode_octal(std::uint64_t v, const std::string& trailer, std::size_t width)
{
    if (trailer.size() > width) return std::nullopt;
    std::size_t digits = width - trailer.size();
    if (digits == 0) {
        if (v != 0) return std::nullopt;
        return trailer;
    }
    auto s = octal_digits(v);
    if (s.size() > digits) return std::nullopt;
    return std::string(digits - s.size(), '0') + s + trailer;
}

// What tar implementations read from a numeric field.
std::optional<std::uint64_t> numeric_value(const std::string& f)
{
    if (f.empty()) return 0;
    auto first = static_cast<std::uint8_t>(f[0]);
    if (first & 0x80) {
        if (first != 0x80) return std::nullopt;
        std::uint64_t v = 0;
        for (std::size_t i = 1; i < f.size(); ++i) {
            if (v >> 56) return std::nullopt;
            v = (v << 8) | static_cast<std::uint8_t>(f[i]);
        }
        return v;
    }
    std::size_t i = 0;
    while (i < f.size() && (f[i] == ' ' || f[i] == '\0')) ++i;
    std::uint64_t v = 0;
    for (; i < f.size() && f[i] >= '0' && f[i] <= '7'; ++i) {
        if (v >> 61) return std::nullopt;
        v = (v << 3) | static_cast<std::uint64_t>(f[i] - '0');
    }
    return v;
}

OctalField decode_octal(const std::string& f)
{
    auto semantic = numeric_value(f);
    std::size_t n = 0;
    while (n < f.size() && f[n] >= '0' && f[n] <= '7') ++n;
    if (n <= 21) {
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v = (v << 3) | static_cast<std::uint64_t>(f[i] - '0');
        std::string trailer = f.substr(n);
        if ((!semantic || *semantic == v) && encode_octal(v, trailer, f.size()) == f) return {v, trailer, std::nullopt};
    }
    return {semantic.value_or(0), std::string(), f};
}

TextField decode_text(const std::string& f)
{
    auto end = f.find('\0');
    TextField t;
    t.value = f.substr(0, end);
    std::string canonical = t.value + std::string(f.size() - t.value.size(), '\0');
    if (canonical != f) t.raw = f;
    return t;
}

void put(std::uint8_t* block, std::size_t offset, std::size_t width, const std::string& bytes, const char* what)
{
    if (bytes.size() != width) throw std::invalid_argument(std::string("tar field ") + what + " has the wrong width");
    std::memcpy(block + offset, bytes.data(), width);
}

void put_text(std::uint8_t* block, std::size_t offset, std::size_t width, const TextField& t, const char* what)
{
    if (t.raw) return put(block, offset, width, *t.raw, what);
    if (t.value.size() > width || t.value.find('\0') != std::string::npos)
        throw std::invalid_argument(std::string("tar field ") + what + " value does not fit");
    std::memcpy(block + offset, t.value.data(), t.value.size());
}

void put_octal(std::uint8_t* block, std::size_t offset, std::size_t width, const OctalField& o, const char* what)
{
    if (o.raw) return put(block, offset, width, *o.raw, what);
    auto s = encode_octal(o.value, o.trailer, width);
    if (!s) throw std::invalid_argument(std::string("tar field ") + what + " value does not fit");
    put(block, offset, width, *s, what);
}

std::uint64_t round_up(std::uint64_t n)
{
    return (n + kBlockSize - 1) / kBlockSize * kBlockSize;
}

// --- member semantics ------------------------------------------------------------

// Interprets successive members the way an extracting tar does: pax and GNU
// long-name records modify the member that follows them.
class MemberWalker {
public:
    enum class Kind { regular, directory, symlink, hardlink, other };

    struct Info {
        Kind kind = Kind::other;
        std::optional<std::string> path;
        std::string link;
        std::uint64_t data_size = 0;
    };

    // Header-only view: returns the data size for the member.
    std::uint64_t data_size(const TarHeaderFields& h) const
    {
        if (pax_size_) return *pax_size_;
        return h.size.value;
    }

    Info next(const TarHeaderFields& h, ByteView data)
    {
        Info info;
        info.data_size = data_size(h);
        switch (h.typeflag) {
        case 'x':
            read_pax(data);
            return info;
        case 'g':
            return info;
        case 'L':
            long_name_ = until_nul(data);
            return info;
        case 'K':
            long_link_ = until_nul(data);
            return info;
        default:
            break;
        }

        std::string name;
        if (pax_path_) name = *pax_path_;
        else if (long_name_) name = *long_name_;
        else if (!h.prefix.value.empty() && h.magic == std::string_view("ustar\0", 6)) name = h.prefix.value + "/" + h.name.value;
        else name = h.name.value;

        if (pax_linkpath_) info.link = *pax_linkpath_;
        else if (long_link_) info.link = *long_link_;
        else info.link = h.linkname.value;

        switch (h.typeflag) {
        case 0:
        case '0':
        case '7': info.kind = Kind::regular; break;
        case '5': info.kind = Kind::directory; break;
        case '2': info.kind = Kind::symlink; break;
        case '1': info.kind = Kind::hardlink; break;
        default: info.kind = Kind::other; break;
        }
        // Old tars mark directories with a trailing slash on a regular entry.
        if ((h.typeflag == 0 || h.typeflag == '0') && !name.empty() && name.back() == '/') info.kind = Kind::directory;
        info.path = normalize(name);

        pax_path_.reset();
        pax_linkpath_.reset();
        pax_size_.reset();
        long_name_.reset();
        long_link_.reset();
        return info;
    }

    static std::optional<std::string> normalize(const std::string& p)
    {
        std::string out;
        std::size_t i = 0;
        while (i <= p.size()) {
            auto j = p.find('/', i);
            if (j == std::string::npos) j = p.size();
            auto part = p.substr(i, j - i);
            i = j + 1;
            if (part.empty() || part == ".") continue;
            if (part == "..") return std::nullopt;
            if (!out.empty()) out.push_back('/');
            out += part;
        }
        if (out.empty()) return std::nullopt;
        return out;
    }

private:
    static std::string until_nul(ByteView data)
    {
        auto s = to_string(data);
        return s.substr(0, s.find('\0'));
    }

    void read_pax(ByteView data)
    {
        auto s = to_string(data);
        std::size_t pos = 0;
        while (pos < s.size()) {
            auto sp = s.find(' ', pos);
            if (sp == std::string::npos) break;
            std::uint64_t len = 0;
            auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + sp, len);
            if (ec != std::errc() || ptr != s.data() + sp || len == 0 || pos + len > s.size()) break;
            auto record = s.substr(sp + 1, pos + len - sp - 1);
            pos += len;
            if (!record.empty() && record.back() == '\n') record.pop_back();
            auto eq = record.find('=');
            if (eq == std::string::npos) continue;
            auto key = record.substr(0, eq);
            auto value = record.substr(eq + 1);
            if (key == "path") pax_path_ = value;
            else if (key == "linkpath") pax_linkpath_ = value;
            else if (key == "size") {
                std::uint64_t v = 0;
                auto [p2, e2] = std::from_chars(value.data(), value.data() + value.size(), v);
                if (e2 == std::errc() && p2 == value.data() + value.size()) pax_size_ = v;
            }
        }
    }

    std::optional<std::string> pax_path_, pax_linkpath_, long_name_, long_link_;
    std::optional<std::uint64_t> pax_size_;
};

// Places `node` at `path` in the extraction root. Returns false when tar
// could not create it (a parent is not a directory, or a directory is in
// the way of a non-directory).
bool place(NarNode& root, const std::string& path, NarNode node)
{
    NarNode* dir = &root;
    std::size_t i = 0;
    for (;;) {
        auto j = path.find('/', i);
        if (j == std::string::npos) break;
        auto part = path.substr(i, j - i);
        i = j + 1;
        NarNode* child = dir->find(part);
        if (!child) child = &dir->set(part, NarNode::directory());
        if (!child->is_directory()) return false;
        dir = child;
    }
    auto leaf = path.substr(i);
    NarNode* existing = dir->find(leaf);
    if (existing && existing->is_directory()) {
        if (node.is_directory()) return true;
        if (!existing->entries().empty()) return false;
    }
    dir->set(leaf, std::move(node));
    return true;
}

template <class T, class Get>
T most_frequent(const std::vector<TarHeaderFields>& members, Get get, T fallback)
{
    std::vector<std::pair<T, std::size_t>> counts;
    for (const auto& m : members) {
        auto v = get(m);
        if (!v) continue;
        auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == *v; });
        if (it == counts.end()) counts.emplace_back(*v, 1);
        else ++it->second;
    }
    if (counts.empty()) return fallback;
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > best->second) best = it;
    return best->first;
}

} // namespace

std::uint64_t header_checksum(ByteView block)
{
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < kBlockSize; ++i)
        sum += (i >= kChksumOffset && i < kChksumOffset + kChksumWidth) ? ' ' : block[i];
    return sum;
}

namespace {

std::int64_t signed_checksum(ByteView block)
{
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < kBlockSize; ++i)
        sum += (i >= kChksumOffset && i < kChksumOffset + kChksumWidth) ? ' ' : static_cast<std::int8_t>(block[i]);
    return sum;
}

bool checksum_ok(ByteView block, const TarHeaderFields& h)
{
    auto stored = numeric_value(h.chksum.raw ? *h.chksum.raw : *encode_octal(h.chksum.value, h.chksum.trailer, 8));
    if (!stored) return false;
    if (*stored == header_checksum(block)) return true;
    auto s = signed_checksum(block);
    return s >= 0 && *stored == static_cast<std::uint64_t>(s);
}

} // namespace

TarHeaderFields decode_header(ByteView block)
{
    if (block.size() < kBlockSize) throw std::invalid_argument("short tar header block");
    TarHeaderFields h;
    h.name = decode_text(slice(block, kNameOffset, kNameWidth));
    for (const auto& d : kOctalFields) h.*d.field = decode_octal(slice(block, d.offset, d.width));
    for (const auto& d : kTextFields) h.*d.field = decode_text(slice(block, d.offset, d.width));
    for (const auto& d : kBlobFields) h.*d.field = slice(block, d.offset, d.width);
    if (all_zero(block.subspan(500, 12))) h.header_padding.clear();
    h.typeflag = block[kTypeflagOffset];
    return h;
}

std::array<std::uint8_t, kBlockSize> encode_header(const TarHeaderFields& h)
{
    std::array<std::uint8_t, kBlockSize> block{};
    put_text(block.data(), kNameOffset, kNameWidth, h.name, "name");
    for (const auto& d : kOctalFields) put_octal(block.data(), d.offset, d.width, h.*d.field, d.key);
    for (const auto& d : kTextFields) put_text(block.data(), d.offset, d.width, h.*d.field, d.key);
    for (const auto& d : kBlobFields) {
        const auto& v = h.*d.field;
        if (v.empty() && d.offset == 500) continue;
        put(block.data(), d.offset, d.width, v, d.key);
    }
    block[kTypeflagOffset] = h.typeflag;
    return block;
}

bool looks_like_tar(ByteView stream)
{
    if (stream.size() < kBlockSize) return false;
    auto first = stream.subspan(0, kBlockSize);
    if (all_zero(first)) return stream.size() % kBlockSize == 0 && all_zero(stream);
    try {
        return checksum_ok(first, decode_header(first));
    } catch (const std::exception&) {
        return false;
    }
}

ParsedTarball parse_tarball(ByteView stream, std::string name)
{
    ParsedTarball out;
    out.spec.name = std::move(name);
    out.spec.digest = sha256(stream);

    struct Raw {
        TarHeaderFields header;
        ByteView data;
        MemberWalker::Info info;
    };
    std::vector<Raw> raws;
    std::vector<bool> placed;
    MemberWalker walker;
    NarNode& tree = out.tree;

    std::size_t pos = 0;
    for (;;) {
        if (pos == stream.size()) break;
        if (stream.size() - pos < kBlockSize) {
            auto tail = stream.subspan(pos);
            if (!all_zero(tail))
                throw Error(ErrorKind::TruncatedArchive, "partial header block at offset " + std::to_string(pos))
                    .at_member(raws.size());
            out.spec.padding = tail.size();
            break;
        }
        auto block = stream.subspan(pos, kBlockSize);
        if (all_zero(block)) {
            auto tail = stream.subspan(pos);
            out.spec.padding = tail.size();
            if (!all_zero(tail)) out.spec.padding_bytes = to_string(tail);
            break;
        }
        auto h = decode_header(block);
        if (!checksum_ok(block, h))
            throw Error(ErrorKind::MalformedHeader, "bad header checksum at offset " + std::to_string(pos))
                .at_member(raws.size());
        auto size = walker.data_size(h);
        auto avail = stream.size() - pos - kBlockSize;
        if (size > avail || round_up(size) > avail)
            throw Error(ErrorKind::TruncatedArchive, "member data runs past the end of the stream")
                .at_member(raws.size());
        auto data = stream.subspan(pos + kBlockSize, size);
        auto pad = stream.subspan(pos + kBlockSize + size, round_up(size) - size);
        if (!all_zero(pad)) h.data_padding = to_string(pad);
        auto info = walker.next(h, data);
        raws.push_back({std::move(h), data, info});
        pos += kBlockSize + round_up(size);
    }

    // Build the extraction root.
    for (const auto& r : raws) {
        const auto& info = r.info;
        bool ok = false;
        if (info.path) {
            switch (info.kind) {
            case MemberWalker::Kind::regular:
                ok = place(tree, *info.path,
                           NarNode::regular(Bytes(r.data.begin(), r.data.end()), (r.header.mode.value & 0111) != 0));
                break;
            case MemberWalker::Kind::directory:
                ok = place(tree, *info.path, NarNode::directory());
                break;
            case MemberWalker::Kind::symlink:
                ok = place(tree, *info.path, NarNode::symlink(info.link));
                break;
            case MemberWalker::Kind::hardlink: {
                auto target = MemberWalker::normalize(info.link);
                const NarNode* t = target ? tree.lookup(*target) : nullptr;
                if (t && t->is_regular()) ok = place(tree, *info.path, NarNode(*t));
                break;
            }
            case MemberWalker::Kind::other:
                break;
            }
        }
        placed.push_back(ok);
    }

    auto headers = std::vector<TarHeaderFields>();
    headers.reserve(raws.size());
    for (const auto& r : raws) headers.push_back(r.header);
    out.spec.default_header = compute_default_header(headers);

    for (std::size_t i = 0; i < raws.size(); ++i) {
        const auto& r = raws[i];
        TarMember m;
        m.name = r.header.name.value;
        m.fields = diff_header(out.spec.default_header, r.header);
        if (!r.data.empty()) {
            bool from_tree = false;
            if (r.info.kind == MemberWalker::Kind::regular && placed[i] && r.info.path) {
                const NarNode* n = tree.lookup(*r.info.path);
                from_tree = n && n->is_regular() && std::equal(n->contents().begin(), n->contents().end(),
                                                               r.data.begin(), r.data.end());
            }
            if (!from_tree) m.data = to_string(r.data);
        }
        out.spec.members.push_back(std::move(m));
    }
    return out;
}

Bytes serialize_tarball(const TarballSpec& spec, const NarNode& tree)
{
    Bytes out;
    MemberWalker walker;
    auto headers = expand_headers(spec);
    for (std::size_t i = 0; i < headers.size(); ++i) {
        const auto& h = headers[i];
        const auto& m = spec.members[i];
        std::array<std::uint8_t, kBlockSize> block;
        try {
            block = encode_header(h);
        } catch (const std::invalid_argument& e) {
            throw Error(ErrorKind::MalformedDescription, e.what()).at_member(i);
        }
        auto size = walker.data_size(h);
        Bytes data;
        if (m.data) {
            data = to_bytes(*m.data);
        } else if (size > 0) {
            // Peek at the effective path without consuming pending records.
            MemberWalker probe = walker;
            auto info = probe.next(h, {});
            const NarNode* n = info.path ? tree.lookup(*info.path) : nullptr;
            if (info.kind != MemberWalker::Kind::regular && info.kind != MemberWalker::Kind::hardlink)
                throw Error(ErrorKind::MalformedDescription, "member '" + m.name + "' has data but no inline copy")
                    .at_member(i);
            if (info.kind == MemberWalker::Kind::hardlink) {
                auto target = MemberWalker::normalize(info.link);
                n = target ? tree.lookup(*target) : nullptr;
            }
            if (!n || !n->is_regular())
                throw Error(ErrorKind::MissingContent, info.path.value_or(m.name)).at_member(i);
            data = n->contents();
        }
        if (data.size() != size)
            throw Error(ErrorKind::DigestMismatch,
                        "member '" + m.name + "' content has " + std::to_string(data.size()) + " bytes, expected " +
                            std::to_string(size))
                .at_member(i);
        walker.next(h, data);
        out.insert(out.end(), block.begin(), block.end());
        out.insert(out.end(), data.begin(), data.end());
        auto pad = round_up(size) - size;
        if (!h.data_padding.empty()) {
            if (h.data_padding.size() != pad)
                throw Error(ErrorKind::MalformedDescription, "data padding of '" + m.name + "' has the wrong length")
                    .at_member(i);
            out.insert(out.end(), h.data_padding.begin(), h.data_padding.end());
        } else {
            out.insert(out.end(), pad, 0);
        }
    }
    if (spec.padding_bytes) {
        if (spec.padding_bytes->size() != spec.padding)
            throw Error(ErrorKind::MalformedDescription, "padding bytes do not match the padding length");
        out.insert(out.end(), spec.padding_bytes->begin(), spec.padding_bytes->end());
    } else {
        out.insert(out.end(), spec.padding, 0);
    }
    if (sha256(out) != spec.digest)
        fail(ErrorKind::DigestMismatch, "reassembled tarball '" + spec.name + "' does not match its digest");
    return out;
}

// --- defaults --------------------------------------------------------------------

TarHeaderFields compute_default_header(const std::vector<TarHeaderFields>& members)
{
    TarHeaderFields d;
    for (const auto& desc : kOctalFields) {
        auto field = desc.field;
        auto& out = d.*field;
        out.value = most_frequent<std::uint64_t>(
            members, [&](const TarHeaderFields& m) { return std::optional<std::uint64_t>((m.*field).value); }, 0);
        out.trailer = most_frequent<std::string>(
            members,
            [&](const TarHeaderFields& m) {
                return (m.*field).raw ? std::nullopt : std::optional<std::string>((m.*field).trailer);
            },
            std::string(1, '\0'));
    }
    for (const auto& desc : kTextFields) {
        auto field = desc.field;
        (d.*field).value = most_frequent<std::string>(
            members, [&](const TarHeaderFields& m) { return std::optional<std::string>((m.*field).value); }, "");
    }
    for (const auto& desc : kBlobFields) {
        auto field = desc.field;
        d.*field = most_frequent<std::string>(
            members, [&](const TarHeaderFields& m) { return std::optional<std::string>(m.*field); }, d.*field);
    }
    d.typeflag = most_frequent<std::uint8_t>(
        members, [](const TarHeaderFields& m) { return std::optional<std::uint8_t>(m.typeflag); }, 0);
    d.data_padding = most_frequent<std::string>(
        members, [](const TarHeaderFields& m) { return std::optional<std::string>(m.data_padding); }, "");
    return d;
}

TarHeaderPatch diff_header(const TarHeaderFields& d, const TarHeaderFields& m)
{
    TarHeaderPatch p;
    p.name_raw = m.name.raw;
    for (const auto& desc : kOctalFields) {
        const auto& mv = m.*desc.field;
        const auto& dv = d.*desc.field;
        auto& pv = p.*desc.patch;
        if (mv.value != dv.value) pv.value = mv.value;
        if (mv.raw) pv.raw = mv.raw;
        else if (mv.trailer != dv.trailer) pv.trailer = mv.trailer;
    }
    for (const auto& desc : kTextFields) {
        const auto& mv = m.*desc.field;
        auto& pv = p.*desc.patch;
        if (mv.value != (d.*desc.field).value) pv.value = mv.value;
        pv.raw = mv.raw;
    }
    for (const auto& desc : kBlobFields)
        if (m.*desc.field != d.*desc.field) p.*desc.patch = m.*desc.field;
    if (m.typeflag != d.typeflag) p.typeflag = m.typeflag;
    if (m.data_padding != d.data_padding) p.data_padding = m.data_padding;
    return p;
}

TarHeaderFields apply_patch(const TarHeaderFields& d, const std::string& name, const TarHeaderPatch& p)
{
    TarHeaderFields h;
    h.name = TextField{name, p.name_raw};
    for (const auto& desc : kOctalFields) {
        const auto& dv = d.*desc.field;
        const auto& pv = p.*desc.patch;
        auto& out = h.*desc.field;
        out.value = pv.value.value_or(dv.value);
        if (pv.raw) {
            out.raw = pv.raw;
            out.trailer.clear();
        } else {
            out.trailer = pv.trailer.value_or(dv.trailer);
        }
    }
    for (const auto& desc : kTextFields) {
        const auto& pv = p.*desc.patch;
        auto& out = h.*desc.field;
        out.value = pv.value.value_or((d.*desc.field).value);
        out.raw = pv.raw;
    }
    for (const auto& desc : kBlobFields) h.*desc.field = (p.*desc.patch).value_or(d.*desc.field);
    h.typeflag = p.typeflag.value_or(d.typeflag);
    h.data_padding = p.data_padding.value_or(d.data_padding);
    return h;
}

std::vector<TarHeaderFields> expand_headers(const TarballSpec& spec)
{
    std::vector<TarHeaderFields> out;
    out.reserve(spec.members.size());
    for (const auto& m : spec.members) out.push_back(apply_patch(spec.default_header, m.name, m.fields));
    return out;
}

} // namespace revive::tar
