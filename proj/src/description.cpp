#include "revive/description.hpp"

#include <stdexcept>

#include "revive/error.hpp"
#include "tar_fields.hpp"

namespace revive {

using sexpr::form;
using sexpr::List;
using sexpr::num;
using sexpr::str;
using sexpr::sym;
using sexpr::Value;

const Sha256Digest& Description::digest() const
{
    if (compression) return compression->digest;
    if (tarball) return tarball->digest;
    if (auto* c = std::get_if<ContentRef>(&leaf)) return c->digest;
    return std::get<DirectoryRef>(leaf).digest.bytes;
}

const std::string& Description::name() const
{
    if (compression) return compression->name;
    if (tarball) return tarball->name;
    if (auto* c = std::get_if<ContentRef>(&leaf)) return c->name;
    return std::get<DirectoryRef>(leaf).name;
}

namespace {

[[noreturn]] void malformed(const std::string& what)
{
    fail(ErrorKind::MalformedDescription, what);
}

Value u64(std::uint64_t v)
{
    return sexpr::Integer::from_u64(v);
}

Value digest_form(ByteView d)
{
    return form("digest", form("sha256", str(to_hex(d))));
}

// --- reading helpers -------------------------------------------------------------

const List& expect_form(const Value& v, std::string_view head)
{
    if (!v.is_form(head)) malformed("expected (" + std::string(head) + " ...)");
    return v.list();
}

const Value* child(const List& l, std::string_view name)
{
    for (std::size_t i = 1; i < l.size(); ++i)
        if (l[i].is_form(name)) return &l[i];
    return nullptr;
}

const Value& required(const List& l, std::string_view name)
{
    auto* v = child(l, name);
    if (!v) malformed("missing (" + std::string(name) + ")");
    return *v;
}

// The single argument of `(name arg)`.
const Value& arg(const Value& f)
{
    const auto& l = f.list();
    if (l.size() < 2) malformed("(" + l[0].symbol().name + ") has no value");
    return l[1];
}

std::uint64_t as_u64(const Value& v)
{
    if (!v.is_integer()) malformed("expected an integer");
    auto x = v.integer().to_u64();
    if (!x) malformed("integer out of range: " + v.integer().text());
    return *x;
}

std::uint64_t as_u64(const Value& v, std::uint64_t max)
{
    auto x = as_u64(v);
    if (x > max) malformed("integer out of range: " + std::to_string(x));
    return x;
}

const std::string& as_str(const Value& v)
{
    if (!v.is_string()) malformed("expected a string");
    return v.string().bytes;
}

const std::string& as_sym(const Value& v)
{
    if (!v.is_symbol()) malformed("expected a symbol");
    return v.symbol().name;
}

Sha256Digest read_digest(const List& l)
{
    const auto& d = expect_form(required(l, "digest"), "digest");
    if (d.size() != 2) malformed("bad (digest)");
    const auto& s = expect_form(d[1], "sha256");
    if (s.size() != 2) malformed("bad (sha256)");
    try {
        return digest_from_hex<32>(as_str(s[1]));
    } catch (const std::invalid_argument& e) {
        malformed(e.what());
    }
}

std::string read_name(const List& l)
{
    return as_str(arg(required(l, "name")));
}

// --- leaves --------------------------------------------------------------------

std::vector<Value> address_list(const std::vector<Swhid>& ids)
{
    List out{sym("addresses")};
    for (const auto& id : ids) out.push_back(form("swhid", str(id.to_string())));
    return out;
}

Value leaf_to_sexpr(const ContentLeaf& leaf)
{
    if (auto* d = std::get_if<DirectoryRef>(&leaf))
        return form("directory-ref", form("version", num(d->version)), form("name", str(d->name)),
                    Value(address_list(d->addresses)), digest_form(d->digest.bytes));
    const auto& c = std::get<ContentRef>(leaf);
    return form("content-ref", form("version", num(c.version)), form("name", str(c.name)),
                Value(address_list(c.addresses)), digest_form(c.digest));
}

std::vector<Swhid> read_addresses(const List& l, SwhidType type)
{
    const auto& a = expect_form(required(l, "addresses"), "addresses");
    std::vector<Swhid> out;
    for (std::size_t i = 1; i < a.size(); ++i) {
        const auto& s = expect_form(a[i], "swhid");
        if (s.size() != 2) malformed("bad (swhid)");
        Swhid id;
        try {
            id = parse_swhid(as_str(s[1]));
        } catch (const Error& e) {
            malformed(e.what());
        }
        if (id.type != type) malformed("address " + id.to_string() + " has the wrong object type");
        out.push_back(id);
    }
    if (out.empty()) malformed("empty (addresses)");
    return out;
}

ContentLeaf leaf_from_sexpr(const Value& v)
{
    if (v.is_form("directory-ref")) {
        const auto& l = v.list();
        DirectoryRef d;
        d.version = static_cast<int>(as_u64(arg(required(l, "version")), 0));
        d.name = read_name(l);
        d.addresses = read_addresses(l, SwhidType::dir);
        d.digest.bytes = read_digest(l);
        return d;
    }
    if (v.is_form("content-ref")) {
        const auto& l = v.list();
        ContentRef c;
        c.version = static_cast<int>(as_u64(arg(required(l, "version")), 0));
        c.name = read_name(l);
        c.addresses = read_addresses(l, SwhidType::cnt);
        c.digest = read_digest(l);
        return c;
    }
    malformed("expected (directory-ref ...) or (content-ref ...)");
}

// --- tar headers --------------------------------------------------------------------

const std::string kNul(1, '\0');

Value octal_full(const char* key, const tar::OctalField& f)
{
    List l{sym(key)};
    l.push_back(u64(f.value));
    if (f.raw) l.push_back(form("raw", str(*f.raw)));
    else if (f.trailer != kNul) l.push_back(form("trailer", str(f.trailer)));
    return l;
}

Value text_full(const char* key, const tar::TextField& f)
{
    List l{sym(key), str(f.value)};
    if (f.raw) l.push_back(form("raw", str(*f.raw)));
    return l;
}

Value default_header_to_sexpr(const tar::TarHeaderFields& h)
{
    List l{sym("default-header")};
    for (const auto& d : tar::detail::kOctalFields) l.push_back(octal_full(d.key, h.*d.field));
    l.push_back(form("typeflag", num(h.typeflag)));
    for (const auto& d : tar::detail::kTextFields) l.push_back(text_full(d.key, h.*d.field));
    for (const auto& d : tar::detail::kBlobFields) l.push_back(form(d.key, str(h.*d.field)));
    l.push_back(form("data-padding", str(h.data_padding)));
    return l;
}

void patch_to_sexpr(List& l, const tar::TarHeaderPatch& p)
{
    if (p.name_raw) l.push_back(form("raw-name", str(*p.name_raw)));
    for (const auto& d : tar::detail::kOctalFields) {
        const auto& f = p.*d.patch;
        if (f.empty()) continue;
        List e{sym(d.key)};
        if (f.value) e.push_back(u64(*f.value));
        if (f.trailer) e.push_back(form("trailer", str(*f.trailer)));
        if (f.raw) e.push_back(form("raw", str(*f.raw)));
        l.push_back(e);
    }
    if (p.typeflag) l.push_back(form("typeflag", num(*p.typeflag)));
    for (const auto& d : tar::detail::kTextFields) {
        const auto& f = p.*d.patch;
        if (f.empty()) continue;
        List e{sym(d.key)};
        if (f.value) e.push_back(str(*f.value));
        if (f.raw) e.push_back(form("raw", str(*f.raw)));
        l.push_back(e);
    }
    for (const auto& d : tar::detail::kBlobFields)
        if (const auto& f = p.*d.patch) l.push_back(form(d.key, str(*f)));
    if (p.data_padding) l.push_back(form("data-padding", str(*p.data_padding)));
}

// Reads `(key [value] [(trailer T)] [(raw R)])`.
tar::OctalPatch read_octal(const Value& v)
{
    tar::OctalPatch p;
    const auto& l = v.list();
    for (std::size_t i = 1; i < l.size(); ++i) {
        if (l[i].is_integer()) p.value = as_u64(l[i]);
        else if (l[i].is_form("trailer")) p.trailer = as_str(arg(l[i]));
        else if (l[i].is_form("raw")) p.raw = as_str(arg(l[i]));
        else malformed("bad numeric header field");
    }
    return p;
}

tar::TextPatch read_text(const Value& v)
{
    tar::TextPatch p;
    const auto& l = v.list();
    for (std::size_t i = 1; i < l.size(); ++i) {
        if (l[i].is_string()) p.value = l[i].string().bytes;
        else if (l[i].is_form("raw")) p.raw = as_str(arg(l[i]));
        else malformed("bad text header field");
    }
    return p;
}

// Reads header fields from the items of a list, skipping `skip` leading items.
tar::TarHeaderPatch read_patch(const List& l, std::size_t skip, std::optional<std::string>* data)
{
    tar::TarHeaderPatch p;
    for (std::size_t i = skip; i < l.size(); ++i) {
        const auto& f = l[i];
        if (!f.is_list() || f.list().empty() || !f.list()[0].is_symbol()) malformed("bad header field");
        const auto& key = f.list()[0].symbol().name;
        bool known = false;
        if (key == "raw-name") p.name_raw = as_str(arg(f)), known = true;
        else if (key == "typeflag") p.typeflag = static_cast<std::uint8_t>(as_u64(arg(f), 255)), known = true;
        else if (key == "data-padding") p.data_padding = as_str(arg(f)), known = true;
        else if (key == "data" && data) *data = as_str(arg(f)), known = true;
        for (const auto& d : tar::detail::kOctalFields)
            if (key == d.key) p.*d.patch = read_octal(f), known = true;
        for (const auto& d : tar::detail::kTextFields)
            if (key == d.key) p.*d.patch = read_text(f), known = true;
        for (const auto& d : tar::detail::kBlobFields)
            if (key == d.key) p.*d.patch = as_str(arg(f)), known = true;
        if (!known) malformed("unknown header field '" + key + "'");
    }
    return p;
}

Value tarball_to_sexpr(const tar::TarballSpec& t, Value input)
{
    List headers{sym("headers")};
    for (const auto& m : t.members) {
        List h{str(m.name)};
        patch_to_sexpr(h, m.fields);
        if (m.data) h.push_back(form("data", str(*m.data)));
        headers.push_back(h);
    }
    List l{sym("tarball"), form("name", str(t.name)), digest_form(t.digest), default_header_to_sexpr(t.default_header),
           Value(headers), form("padding", u64(t.padding))};
    if (t.padding_bytes) l.push_back(form("padding-bytes", str(*t.padding_bytes)));
    l.push_back(form("input", std::move(input)));
    return l;
}

tar::TarballSpec tarball_from_sexpr(const List& l)
{
    tar::TarballSpec t;
    t.name = read_name(l);
    t.digest = read_digest(l);
    auto patch = read_patch(expect_form(required(l, "default-header"), "default-header"), 1, nullptr);
    t.default_header = tar::apply_patch(tar::TarHeaderFields{}, "", patch);
    const auto& headers = expect_form(required(l, "headers"), "headers");
    for (std::size_t i = 1; i < headers.size(); ++i) {
        if (!headers[i].is_list() || headers[i].list().empty() || !headers[i].list()[0].is_string())
            malformed("bad member header");
        tar::TarMember m;
        m.name = headers[i].list()[0].string().bytes;
        m.fields = read_patch(headers[i].list(), 1, &m.data);
        t.members.push_back(std::move(m));
    }
    t.padding = as_u64(arg(required(l, "padding")));
    if (auto* pb = child(l, "padding-bytes")) t.padding_bytes = as_str(arg(*pb));
    return t;
}

// --- compression layers ----------------------------------------------------------

std::uint8_t implied_flags(const compress::GzipHeader& h)
{
    std::uint8_t f = 0;
    if (h.extra) f |= compress::kFExtra;
    if (h.file_name) f |= compress::kFName;
    if (h.comment) f |= compress::kFComment;
    if (h.header_crc) f |= compress::kFHcrc;
    return f;
}

Value gzip_header_to_sexpr(const compress::GzipHeader& h)
{
    List l{sym("header"), form("mtime", u64(h.mtime)), form("extra-flags", num(h.extra_flags)),
           form("os", num(h.os))};
    if (h.flags != implied_flags(h)) l.push_back(form("flags", num(h.flags)));
    if (h.extra) l.push_back(form("extra", str(*h.extra)));
    if (h.file_name) l.push_back(form("file-name", str(*h.file_name)));
    if (h.comment) l.push_back(form("comment", str(*h.comment)));
    if (h.header_crc) l.push_back(form("header-crc", num(*h.header_crc)));
    return l;
}

compress::GzipHeader gzip_header_from_sexpr(const Value& v)
{
    const auto& l = expect_form(v, "header");
    compress::GzipHeader h;
    h.mtime = static_cast<std::uint32_t>(as_u64(arg(required(l, "mtime")), 0xFFFFFFFFu));
    h.extra_flags = static_cast<std::uint8_t>(as_u64(arg(required(l, "extra-flags")), 255));
    h.os = static_cast<std::uint8_t>(as_u64(arg(required(l, "os")), 255));
    if (auto* x = child(l, "extra")) h.extra = as_str(arg(*x));
    if (auto* x = child(l, "file-name")) h.file_name = as_str(arg(*x));
    if (auto* x = child(l, "comment")) h.comment = as_str(arg(*x));
    if (auto* x = child(l, "header-crc")) h.header_crc = static_cast<std::uint16_t>(as_u64(arg(*x), 0xFFFF));
    h.flags = implied_flags(h);
    if (auto* x = child(l, "flags")) h.flags = static_cast<std::uint8_t>(as_u64(arg(*x), 255));
    if (static_cast<bool>(h.flags & compress::kFExtra) != h.extra.has_value() ||
        static_cast<bool>(h.flags & compress::kFName) != h.file_name.has_value() ||
        static_cast<bool>(h.flags & compress::kFComment) != h.comment.has_value() ||
        static_cast<bool>(h.flags & compress::kFHcrc) != h.header_crc.has_value())
        malformed("gzip flags disagree with the header fields present");
    return h;
}

Value gzip_footer_to_sexpr(const compress::GzipFooter& f)
{
    return form("footer", form("crc", u64(f.crc)), form("isize", u64(f.isize)));
}

compress::GzipFooter gzip_footer_from_sexpr(const Value& v)
{
    const auto& l = expect_form(v, "footer");
    return {static_cast<std::uint32_t>(as_u64(arg(required(l, "crc")), 0xFFFFFFFFu)),
            static_cast<std::uint32_t>(as_u64(arg(required(l, "isize")), 0xFFFFFFFFu))};
}

std::string read_compressor(const List& l, std::initializer_list<compress::Family> families)
{
    const auto& id = as_sym(arg(required(l, "compressor")));
    try {
        const auto& c = compress::compressor(id);
        for (auto f : families)
            if (c.family == f) return id;
    } catch (const std::invalid_argument&) {
    }
    malformed("unknown or misplaced compressor '" + id + "'");
}

Value compression_to_sexpr(const CompressionLayer& c, Value input)
{
    using compress::Format;
    switch (c.format) {
    case Format::gzip:
        if (c.members.size() == 1) {
            const auto& m = c.members[0];
            return form("gzip-member", form("name", str(c.name)), digest_form(c.digest),
                        gzip_header_to_sexpr(m.header), gzip_footer_to_sexpr(m.footer),
                        form("compressor", sym(m.compressor)), form("input", std::move(input)));
        } else {
            List members{sym("members")};
            for (const auto& m : c.members)
                members.push_back(form("member", gzip_header_to_sexpr(m.header), gzip_footer_to_sexpr(m.footer),
                                       form("compressor", sym(m.compressor))));
            return form("gzip-members", form("name", str(c.name)), digest_form(c.digest), Value(members),
                        form("input", std::move(input)));
        }
    case Format::bzip2:
        return form("bzip2", form("name", str(c.name)), digest_form(c.digest), form("compressor", sym(c.compressor)),
                    form("input", std::move(input)));
    case Format::xz:
        return form("xz", form("name", str(c.name)), digest_form(c.digest), form("compressor", sym(c.compressor)),
                    form("check", sym(std::string(compress::to_string(c.check)))), form("input", std::move(input)));
    case Format::plain:
        break;
    }
    throw std::logic_error("plain compression layer");
}

GzipMemberSpec gzip_member_from(const List& l)
{
    GzipMemberSpec m;
    m.header = gzip_header_from_sexpr(required(l, "header"));
    m.footer = gzip_footer_from_sexpr(required(l, "footer"));
    m.compressor = read_compressor(l, {compress::Family::gnu, compress::Family::zlib});
    return m;
}

std::optional<CompressionLayer> compression_from_sexpr(const Value& v)
{
    using compress::Format;
    CompressionLayer c;
    const List* l = nullptr;
    if (v.is_form("gzip-member")) {
        l = &v.list();
        c.format = Format::gzip;
        c.members.push_back(gzip_member_from(*l));
    } else if (v.is_form("gzip-members")) {
        l = &v.list();
        c.format = Format::gzip;
        const auto& ms = expect_form(required(*l, "members"), "members");
        for (std::size_t i = 1; i < ms.size(); ++i) c.members.push_back(gzip_member_from(expect_form(ms[i], "member")));
        if (c.members.empty()) malformed("empty (members)");
    } else if (v.is_form("bzip2")) {
        l = &v.list();
        c.format = Format::bzip2;
        c.compressor = read_compressor(*l, {compress::Family::bzip2});
    } else if (v.is_form("xz")) {
        l = &v.list();
        c.format = Format::xz;
        c.compressor = read_compressor(*l, {compress::Family::xz});
        try {
            c.check = compress::xz_check_from_string(as_sym(arg(required(*l, "check"))));
        } catch (const std::invalid_argument& e) {
            malformed(e.what());
        }
    } else {
        return std::nullopt;
    }
    c.name = read_name(*l);
    c.digest = read_digest(*l);
    return c;
}

const Value& input_of(const List& l)
{
    const auto& in = expect_form(required(l, "input"), "input");
    if (in.size() != 2) malformed("(input) must hold exactly one value");
    return in[1];
}

} // namespace

sexpr::Value to_sexpr(const Description& d)
{
    Value v = leaf_to_sexpr(d.leaf);
    if (d.tarball) v = tarball_to_sexpr(*d.tarball, std::move(v));
    if (d.compression) v = compression_to_sexpr(*d.compression, std::move(v));
    return form("disarchive", form("version", num(d.version)), std::move(v));
}

Description description_from_sexpr(const sexpr::Value& v)
{
    const auto& top = expect_form(v, "disarchive");
    Description d;
    d.version = static_cast<int>(as_u64(arg(required(top, "version")), 0));
    if (top.size() != 3) malformed("(disarchive) must hold a version and one layer");
    const Value* layer = &top[2];
    if (auto c = compression_from_sexpr(*layer)) {
        d.compression = std::move(c);
        layer = &input_of(layer->list());
    }
    if (layer->is_form("tarball")) {
        d.tarball = tarball_from_sexpr(layer->list());
        layer = &input_of(layer->list());
    }
    d.leaf = leaf_from_sexpr(*layer);
    return d;
}

std::string write_description(const Description& d, bool pretty)
{
    auto v = to_sexpr(d);
    return pretty ? sexpr::write_pretty(v) : sexpr::write_canonical(v) + "\n";
}

Description read_description(std::string_view text)
{
    sexpr::Value v;
    try {
        v = sexpr::parse(text);
    } catch (const Error& e) {
        malformed(std::string("not an s-expression: ") + e.what());
    }
    return description_from_sexpr(v);
}

} // namespace revive
