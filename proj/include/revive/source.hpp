#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "revive/hash.hpp"
#include "revive/nar.hpp"

namespace revive {

enum class FetchMethod { url, git, svn, hg };
std::string_view to_string(FetchMethod m);
/// Accepts "url", "git", "svn", "hg" and the `*-fetch` spellings.
FetchMethod fetch_method_from_string(std::string_view s);
inline bool is_vcs(FetchMethod m) { return m != FetchMethod::url; }

struct GitRef {
    std::optional<Sha1Digest> commit;
    std::optional<std::string> tag;

    friend bool operator==(const GitRef&, const GitRef&) = default;
};

/// One origin of a package's source code.
struct SourceRecord {
    FetchMethod method = FetchMethod::url;
    /// Mirrors, tried in order.
    std::vector<std::string> urls;
    /// Expected sha256 of the file (url).
    std::optional<Sha256Digest> file_sha256;
    /// Expected nar-sha256 of the checkout (git, svn, hg).
    std::optional<NarDigest> nar_sha256;
    std::optional<GitRef> git_ref;
    std::optional<std::uint64_t> svn_revision;
    /// Sub-directories to export instead of the whole repository.
    std::vector<std::string> svn_subdirs;
    /// nar-sha256 of each entry of svn_subdirs; empty when only the
    /// combined digest is known.
    std::vector<NarDigest> svn_subdir_digests;
    /// Package name, used to map dependency edges onto sources.
    std::string package;

    friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

/// Throws Error(PreconditionViolation) for inconsistent records.
void validate(const SourceRecord& r);

/// `sha256-<base64>`.
std::string sri_sha256(const Sha256Digest& d);
/// Accepts `sha256-<base64>`, bare 64-digit hex and 52-char nix base32.
Sha256Digest parse_sha256(std::string_view text);

/// Deterministic JSON manifest: `{"sources": [...], "version": "1"}` with
/// entries sorted by first URL.
std::string emit_sources_manifest(const std::vector<SourceRecord>& records);

struct SourcesManifest {
    std::vector<SourceRecord> sources;
    /// Optional snapshot metadata carried by the document.
    std::string label;
    std::string date;
};

/// Throws Error(PreconditionViolation) for malformed documents.
SourcesManifest read_sources_manifest(std::string_view json_text);
SourcesManifest load_sources_manifest(const std::string& path);

} // namespace revive
