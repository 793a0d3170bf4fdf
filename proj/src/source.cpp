#include "revive/source.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "revive/encoding.hpp"
#include "revive/error.hpp"

namespace revive {

using json = nlohmann::json;

std::string_view to_string(FetchMethod m)
{
    switch (m) {
    case FetchMethod::url: return "url";
    case FetchMethod::git: return "git";
    case FetchMethod::svn: return "svn";
    case FetchMethod::hg: return "hg";
    }
    return "?";
}

FetchMethod fetch_method_from_string(std::string_view s)
{
    if (s == "url" || s == "url-fetch") return FetchMethod::url;
    if (s == "git" || s == "git-fetch") return FetchMethod::git;
    if (s == "svn" || s == "svn-fetch" || s == "svn-multi-fetch") return FetchMethod::svn;
    if (s == "hg" || s == "hg-fetch") return FetchMethod::hg;
    fail(ErrorKind::PreconditionViolation, "unknown fetch method '" + std::string(s) + "'");
}

void validate(const SourceRecord& r)
{
    auto bad = [&](const std::string& why) {
        fail(ErrorKind::PreconditionViolation,
             std::string(to_string(r.method)) + " source " + (r.urls.empty() ? "?" : r.urls[0]) + ": " + why);
    };
    if (r.urls.empty()) bad("no URLs");
    if (r.method == FetchMethod::url) {
        if (!r.file_sha256) bad("missing file sha256");
        if (r.nar_sha256) bad("url sources take a file digest, not a nar digest");
        if (r.git_ref || r.svn_revision || !r.svn_subdirs.empty()) bad("VCS fields on a url source");
        return;
    }
    if (r.file_sha256) bad("VCS sources take a nar digest, not a file digest");
    if (r.method != FetchMethod::svn && (r.svn_revision || !r.svn_subdirs.empty() || !r.svn_subdir_digests.empty()))
        bad("svn fields on a non-svn source");
    if (r.method != FetchMethod::git && r.git_ref) bad("git reference on a non-git source");
    if (r.method == FetchMethod::git) {
        if (!r.git_ref) bad("missing git reference");
        if (r.git_ref->commit.has_value() == r.git_ref->tag.has_value()) bad("git reference needs exactly one of commit and tag");
    }
    if (r.method == FetchMethod::svn) {
        if (!r.svn_revision) bad("missing svn revision");
        if (!r.svn_subdir_digests.empty() && r.svn_subdir_digests.size() != r.svn_subdirs.size())
            bad("svn sub-directory digests do not match the sub-directory list");
        if (!r.nar_sha256 && r.svn_subdir_digests.empty()) bad("missing nar digest");
        return;
    }
    if (!r.nar_sha256) bad("missing nar digest");
}

std::string sri_sha256(const Sha256Digest& d)
{
    return "sha256-" + base64_encode(ByteView(d.data(), d.size()));
}

Sha256Digest parse_sha256(std::string_view text)
{
    Bytes raw;
    try {
        if (text.substr(0, 7) == "sha256-") raw = base64_decode(text.substr(7));
        else if (text.size() == 64 && is_hex(text)) raw = from_hex(text);
        else if (text.size() == 52) raw = nix_base32_decode(text);
    } catch (const std::exception& e) {
        fail(ErrorKind::PreconditionViolation, "bad sha256 '" + std::string(text) + "': " + e.what());
    }
    if (raw.size() != 32) fail(ErrorKind::PreconditionViolation, "bad sha256 '" + std::string(text) + "'");
    Sha256Digest d{};
    std::copy(raw.begin(), raw.end(), d.begin());
    return d;
}

namespace {

json entry_json(const SourceRecord& r)
{
    json e;
    e["type"] = std::string(to_string(r.method));
    e["urls"] = r.urls;
    if (r.file_sha256) e["integrity"] = sri_sha256(*r.file_sha256);
    if (r.nar_sha256) e["integrity"] = sri_sha256(r.nar_sha256->bytes);
    if (!r.package.empty()) e["name"] = r.package;
    switch (r.method) {
    case FetchMethod::url:
        break;
    case FetchMethod::git:
        e["git_url"] = r.urls[0];
        e["git_ref"] = r.git_ref->commit ? to_hex(*r.git_ref->commit) : *r.git_ref->tag;
        break;
    case FetchMethod::svn: {
        e["svn_url"] = r.urls[0];
        e["svn_revision"] = *r.svn_revision;
        if (!r.svn_subdirs.empty()) e["svn_subdirs"] = r.svn_subdirs;
        if (!r.svn_subdir_digests.empty()) {
            json ds = json::array();
            for (const auto& d : r.svn_subdir_digests) ds.push_back(sri_sha256(d.bytes));
            e["svn_subdir_integrity"] = ds;
        }
        break;
    }
    case FetchMethod::hg:
        e["hg_url"] = r.urls[0];
        break;
    }
    return e;
}

std::string str_field(const json& e, const char* key)
{
    if (!e.contains(key) || !e[key].is_string())
        fail(ErrorKind::PreconditionViolation, std::string("manifest entry lacks string field '") + key + "'");
    return e[key].get<std::string>();
}

std::vector<std::string> str_list(const json& e, const char* key)
{
    std::vector<std::string> out;
    if (!e.contains(key)) return out;
    if (!e[key].is_array()) fail(ErrorKind::PreconditionViolation, std::string("'") + key + "' must be a list");
    for (const auto& v : e[key]) {
        if (!v.is_string()) fail(ErrorKind::PreconditionViolation, std::string("'") + key + "' must hold strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

SourceRecord entry_from_json(const json& e)
{
    if (!e.is_object()) fail(ErrorKind::PreconditionViolation, "manifest entry is not an object");
    SourceRecord r;
    r.method = fetch_method_from_string(str_field(e, "type"));
    r.urls = str_list(e, "urls");
    const char* vcs_url_key = r.method == FetchMethod::git ? "git_url" : r.method == FetchMethod::svn ? "svn_url" : "hg_url";
    if (r.urls.empty() && e.contains(vcs_url_key)) r.urls.push_back(str_field(e, vcs_url_key));
    if (e.contains("name") && e["name"].is_string()) r.package = e["name"].get<std::string>();
    if (e.contains("integrity")) {
        auto d = parse_sha256(str_field(e, "integrity"));
        if (r.method == FetchMethod::url) r.file_sha256 = d;
        else r.nar_sha256 = NarDigest{d};
    }
    if (r.method == FetchMethod::git && e.contains("git_ref")) {
        auto ref = str_field(e, "git_ref");
        GitRef g;
        if (ref.size() == 40 && is_hex(ref)) g.commit = digest_from_hex<20>(ref);
        else g.tag = ref;
        r.git_ref = g;
    }
    if (r.method == FetchMethod::svn) {
        if (e.contains("svn_revision")) {
            const auto& v = e["svn_revision"];
            if (v.is_number_unsigned()) r.svn_revision = v.get<std::uint64_t>();
            else if (v.is_string()) r.svn_revision = std::stoull(v.get<std::string>());
            else fail(ErrorKind::PreconditionViolation, "bad svn_revision");
        }
        r.svn_subdirs = str_list(e, "svn_subdirs");
        for (const auto& s : str_list(e, "svn_subdir_integrity")) r.svn_subdir_digests.push_back(NarDigest{parse_sha256(s)});
    }
    validate(r);
    return r;
}

} // namespace

std::string emit_sources_manifest(const std::vector<SourceRecord>& records)
{
    std::vector<std::pair<std::string, json>> entries;
    for (const auto& r : records) {
        validate(r);
        auto e = entry_json(r);
        entries.emplace_back(e.dump(), std::move(e));
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        const auto& ua = a.second["urls"][0].template get_ref<const std::string&>();
        const auto& ub = b.second["urls"][0].template get_ref<const std::string&>();
        return ua != ub ? ua < ub : a.first < b.first;
    });
    json doc;
    doc["version"] = "1";
    doc["sources"] = json::array();
    for (auto& [_, e] : entries) doc["sources"].push_back(std::move(e));
    return doc.dump() + "\n";
}

SourcesManifest read_sources_manifest(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(ErrorKind::PreconditionViolation, std::string("manifest is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("sources") || !doc["sources"].is_array())
        fail(ErrorKind::PreconditionViolation, "manifest lacks a 'sources' list");
    SourcesManifest m;
    for (std::size_t i = 0; i < doc["sources"].size(); ++i) {
        try {
            m.sources.push_back(entry_from_json(doc["sources"][i]));
        } catch (const Error& e) {
            fail(ErrorKind::PreconditionViolation, "source " + std::to_string(i) + ": " + e.what());
        }
    }
    if (doc.contains("label") && doc["label"].is_string()) m.label = doc["label"].get<std::string>();
    if (doc.contains("date") && doc["date"].is_string()) m.date = doc["date"].get<std::string>();
    return m;
}

SourcesManifest load_sources_manifest(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::PreconditionViolation, "cannot read manifest " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_sources_manifest(text);
}

} // namespace revive
