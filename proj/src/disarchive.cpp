#include "revive/disarchive.hpp"

#include <fstream>

#include "revive/error.hpp"

namespace revive {

namespace fs = std::filesystem;

namespace {

template <class F>
auto in_layer(std::size_t layer, F&& f)
{
    try {
        return f();
    } catch (Error& e) {
        if (!e.layer()) e.at_layer(layer);
        throw;
    }
}

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

Swhid directory_address(const NarNode& tree)
{
    return swhid_for_directory(tree);
}

std::string leaf_key(const ContentLeaf& leaf)
{
    if (auto* d = std::get_if<DirectoryRef>(&leaf)) return "nar:" + d->digest.hex();
    return "file:" + to_hex(std::get<ContentRef>(leaf).digest);
}

const std::string& leaf_name(const ContentLeaf& leaf)
{
    return std::visit([](const auto& l) -> const std::string& { return l.name; }, leaf);
}

void check_content(const ContentLeaf& leaf, const NarNode& content)
{
    if (auto* d = std::get_if<DirectoryRef>(&leaf)) {
        if (!content.is_directory()) fail(ErrorKind::ContentDigestMismatch, "content for directory-ref is not a directory");
        auto got = nar_hash(content);
        if (got.bytes != d->digest.bytes)
            fail(ErrorKind::ContentDigestMismatch, "nar-sha256 " + got.hex() + ", expected " + d->digest.hex());
        return;
    }
    const auto& c = std::get<ContentRef>(leaf);
    if (!content.is_regular()) fail(ErrorKind::ContentDigestMismatch, "content for content-ref is not a regular file");
    auto got = sha256(content.contents());
    if (got != c.digest)
        fail(ErrorKind::ContentDigestMismatch, "sha256 " + to_hex(got) + ", expected " + to_hex(c.digest));
}

void check_layer(ByteView bytes, const Sha256Digest& expected, std::string_view what)
{
    auto got = sha256(bytes);
    if (got != expected)
        fail(ErrorKind::ReconstructionMismatch,
             std::string(what) + " sha256 " + to_hex(got) + ", expected " + to_hex(expected));
}

Bytes rebuild_compression(const CompressionLayer& c, ByteView payload)
{
    using compress::Format;
    auto lookup = [](const std::string& id) -> const compress::Compressor& {
        try {
            return compress::compressor(id);
        } catch (const std::invalid_argument& e) {
            fail(ErrorKind::MalformedDescription, e.what());
        }
    };
    switch (c.format) {
    case Format::gzip: {
        Bytes out;
        std::size_t offset = 0;
        for (std::size_t i = 0; i < c.members.size(); ++i) {
            const auto& m = c.members[i];
            std::size_t len = i + 1 == c.members.size() ? payload.size() - offset : m.footer.isize;
            if (offset + len > payload.size())
                fail(ErrorKind::ReconstructionMismatch, "gzip member sizes exceed the payload");
            auto member = compress::recompress(payload.subspan(offset, len), lookup(m.compressor), m.header);
            out.insert(out.end(), member.begin(), member.end());
            offset += len;
        }
        return out;
    }
    case Format::bzip2:
        return compress::recompress(payload, lookup(c.compressor));
    case Format::xz:
        return compress::recompress(payload, lookup(c.compressor), {}, c.check);
    case Format::plain:
        break;
    }
    fail(ErrorKind::MalformedDescription, "plain compression layer");
}

} // namespace

std::string inner_name(std::string_view outer, compress::Format format)
{
    using compress::Format;
    struct Rule {
        Format format;
        std::string_view suffix, replacement;
    };
    static const Rule rules[] = {
        {Format::gzip, ".tgz", ".tar"},  {Format::gzip, ".gz", ""},     {Format::gzip, ".z", ""},
        {Format::bzip2, ".tbz2", ".tar"}, {Format::bzip2, ".tbz", ".tar"}, {Format::bzip2, ".bz2", ""},
        {Format::xz, ".txz", ".tar"},    {Format::xz, ".xz", ""},
    };
    for (const auto& r : rules)
        if (r.format == format && ends_with(outer, r.suffix) && outer.size() > r.suffix.size())
            return std::string(outer.substr(0, outer.size() - r.suffix.size())) + std::string(r.replacement);
    return std::string(outer);
}

Disassembly disassemble(ByteView file, std::string name)
{
    Disassembly out;
    auto format = in_layer(0, [&] { return compress::detect_format(file); });
    std::size_t layer = 0;
    Bytes payload;
    ByteView inner = file;
    std::string inner_file_name = name;

    if (format != compress::Format::plain) {
        auto dec = in_layer(0, [&] { return compress::decompress(file); });
        CompressionLayer c;
        c.format = format;
        c.name = name;
        c.digest = sha256(file);
        in_layer(0, [&] {
            if (format == compress::Format::gzip) {
                for (const auto& m : dec.members) {
                    auto guess = compress::guess_deflate(m.payload, m.body, m.header.extra_flags);
                    if (!guess) fail(ErrorKind::NoMatchingCompressor, "no catalog entry reproduces gzip member");
                    c.members.push_back({m.header, m.footer, guess->id});
                }
            } else {
                c.compressor = compress::guess_compressor(dec.payload, file).id;
                if (format == compress::Format::xz) c.check = dec.xz.check;
            }
            return 0;
        });
        out.description.compression = std::move(c);
        payload = std::move(dec.payload);
        inner = payload;
        inner_file_name = inner_name(name, format);
        layer = 1;
        auto nested = in_layer(layer, [&] { return compress::detect_format(inner); });
        if (nested != compress::Format::plain)
            throw Error(ErrorKind::UnknownFormat, "nested " + std::string(compress::to_string(nested)) + " stream")
                .at_layer(layer);
    }

    if (tar::looks_like_tar(inner)) {
        auto parsed = in_layer(layer, [&] { return tar::parse_tarball(inner, inner_file_name); });
        DirectoryRef ref;
        const auto& entries = parsed.tree.entries();
        if (entries.size() == 1 && entries[0].second.is_directory()) {
            ref.name = entries[0].first;
            out.content = entries[0].second;
        } else {
            out.content = std::move(parsed.tree);
        }
        ref.addresses.push_back(directory_address(out.content));
        ref.digest = nar_hash(out.content);
        out.description.tarball = std::move(parsed.spec);
        out.description.leaf = std::move(ref);
    } else {
        ContentRef ref;
        ref.name = inner_file_name;
        ref.addresses.push_back(swhid_for_content(inner));
        ref.digest = sha256(inner);
        out.content = NarNode::regular(Bytes(inner.begin(), inner.end()));
        out.description.leaf = std::move(ref);
    }
    return out;
}

Disassembly disassemble_file(const fs::path& path)
{
    Bytes data = read_file(path.string());
    return disassemble(data, path.filename().string());
}

void write_content(const Disassembly& d, const fs::path& dir)
{
    const auto& name = leaf_name(d.description.leaf);
    if (name.empty()) {
        fs::create_directories(dir);
        for (const auto& [n, child] : d.content.entries()) tree_to_disk(child, dir / n);
        return;
    }
    fs::create_directories(dir);
    tree_to_disk(d.content, dir / name);
}

// --- content providers ------------------------------------------------------------

NarNode LocalContentProvider::fetch(const ContentLeaf& leaf)
{
    const auto& name = leaf_name(leaf);
    fs::path p = name.empty() ? root_ : root_ / name;
    std::error_code ec;
    auto st = fs::symlink_status(p, ec);
    if (ec || !fs::exists(st)) fail(ErrorKind::ContentUnavailable, "no content at " + p.string());
    try {
        if (std::holds_alternative<ContentRef>(leaf)) {
            if (!fs::is_regular_file(st)) fail(ErrorKind::ContentUnavailable, p.string() + " is not a regular file");
            return NarNode::regular(read_file(p.string()));
        }
        return tree_from_disk(p);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ContentUnavailable) throw;
        fail(ErrorKind::ContentUnavailable, e.what());
    } catch (const std::exception& e) {
        fail(ErrorKind::ContentUnavailable, e.what());
    }
}

void MemoryContentProvider::add(const ContentLeaf& leaf, NarNode content)
{
    std::lock_guard lock(mutex_);
    store_.insert_or_assign(leaf_key(leaf), std::move(content));
}

NarNode MemoryContentProvider::fetch(const ContentLeaf& leaf)
{
    std::lock_guard lock(mutex_);
    auto it = store_.find(leaf_key(leaf));
    if (it == store_.end()) fail(ErrorKind::ContentUnavailable, "no stored content for " + leaf_key(leaf));
    return it->second;
}

// --- assembly ---------------------------------------------------------------------

Bytes assemble(const Description& desc, ContentProvider& provider)
{
    NarNode content = provider.fetch(desc.leaf);
    check_content(desc.leaf, content);

    Bytes inner;
    if (desc.tarball) {
        const auto* ref = std::get_if<DirectoryRef>(&desc.leaf);
        if (!ref) fail(ErrorKind::MalformedDescription, "tarball layer over a content-ref");
        NarNode root = NarNode::directory();
        if (ref->name.empty()) root = std::move(content);
        else root.set(ref->name, std::move(content));
        try {
            inner = tar::serialize_tarball(*desc.tarball, root);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::DigestMismatch || e.kind() == ErrorKind::MissingContent)
                fail(ErrorKind::ReconstructionMismatch, e.what());
            throw;
        }
    } else {
        if (!std::holds_alternative<ContentRef>(desc.leaf))
            fail(ErrorKind::MalformedDescription, "directory-ref without a tarball layer");
        inner = content.contents();
    }
    if (!desc.compression) return inner;

    Bytes outer = rebuild_compression(*desc.compression, inner);
    check_layer(outer, desc.compression->digest, desc.compression->name);
    return outer;
}

// --- description databases --------------------------------------------------------

fs::path LocalDescriptionDb::path_for(const Sha256Digest& digest) const
{
    auto hex = to_hex(digest);
    return root_ / "sha256" / hex.substr(0, 2) / (hex.substr(2) + ".sexp");
}

Description LocalDescriptionDb::lookup(const Sha256Digest& digest)
{
    auto p = path_for(digest);
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorKind::NotFound, "no description for sha256 " + to_hex(digest));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_description(text);
}

void LocalDescriptionDb::store(const Description& desc)
{
    auto p = path_for(desc.digest());
    fs::create_directories(p.parent_path());
    auto text = write_description(desc);
    write_file(p.string(), as_bytes(text));
}

RemoteDescriptionDb::RemoteDescriptionDb(std::string base_url, Transport& transport)
    : base_url_(std::move(base_url)), transport_(transport)
{
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

Description RemoteDescriptionDb::lookup(const Sha256Digest& digest)
{
    HttpRequest req;
    req.url = base_url_ + "/sha256/" + to_hex(digest);
    auto r = send_following_redirects(transport_, req);
    if (r.status == 404) fail(ErrorKind::NotFound, "no description for sha256 " + to_hex(digest));
    if (r.status != 200) fail(ErrorKind::TransportError, req.url + ": HTTP " + std::to_string(r.status));
    return read_description(r.body);
}

Description description_db_lookup(const Sha256Digest& digest, DescriptionDb& db)
{
    auto d = db.lookup(digest);
    if (d.digest() != digest)
        fail(ErrorKind::MalformedDescription,
             "description digest " + to_hex(d.digest()) + " does not match key " + to_hex(digest));
    return d;
}

} // namespace revive
