#include "revive/heritage.hpp"

#include <algorithm>
#include <thread>

#include <json.hpp>

#include "revive/compress.hpp"
#include "revive/error.hpp"
#include "revive/tar.hpp"

namespace revive {

using json = nlohmann::json;

// --- clocks and rate limiting -----------------------------------------------------

Clock::time_point SystemClock::now()
{
    return std::chrono::steady_clock::now();
}

void SystemClock::sleep_for(duration d)
{
    std::this_thread::sleep_for(d);
}

Clock::time_point ManualClock::now()
{
    std::lock_guard lock(mutex_);
    return now_;
}

void ManualClock::sleep_for(duration d)
{
    advance(d);
}

void ManualClock::advance(duration d)
{
    std::lock_guard lock(mutex_);
    now_ += d;
}

RateLimiter::RateLimiter(std::size_t budget, Clock::duration window, Clock& clock)
    : budget_(budget), window_(window), clock_(clock)
{
    if (budget_ == 0) throw std::invalid_argument("rate budget must be positive");
}

void RateLimiter::acquire()
{
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = clock_.now();
        if (!started_ || now - window_start_ >= window_) {
            started_ = true;
            window_start_ = now;
            used_ = 0;
        }
        if (used_ < budget_) {
            ++used_;
            return;
        }
        // Sleeping under the lock keeps waiters in line behind the window.
        clock_.sleep_for(window_start_ + window_ - now);
    }
}

// --- small helpers ----------------------------------------------------------------

std::string expand_path(std::string_view tmpl, const std::map<std::string, std::string>& values)
{
    std::string out;
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            auto key = std::string(tmpl.substr(i + 1, close - i - 1));
            auto it = values.find(key);
            if (close == std::string_view::npos || it == values.end())
                throw std::invalid_argument("unbound placeholder in " + std::string(tmpl));
            out += it->second;
            i = close + 1;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

std::string_view to_string(VaultStatus s)
{
    switch (s) {
    case VaultStatus::new_: return "new";
    case VaultStatus::pending: return "pending";
    case VaultStatus::done: return "done";
    case VaultStatus::failed: return "failed";
    }
    return "?";
}

std::string_view to_string(VisitType t)
{
    switch (t) {
    case VisitType::git: return "git";
    case VisitType::svn: return "svn";
    case VisitType::hg: return "hg";
    }
    return "?";
}

VisitType visit_type_from_string(std::string_view s)
{
    if (s == "git") return VisitType::git;
    if (s == "svn") return VisitType::svn;
    if (s == "hg") return VisitType::hg;
    fail(ErrorKind::PreconditionViolation, "not a VCS visit type: " + std::string(s));
}

std::string_view to_string(SaveStatus s)
{
    switch (s) {
    case SaveStatus::accepted: return "accepted";
    case SaveStatus::rejected: return "rejected";
    case SaveStatus::pending: return "pending";
    case SaveStatus::succeeded: return "succeeded";
    case SaveStatus::failed: return "failed";
    }
    return "?";
}

bool looks_like_file_url(std::string_view url)
{
    if (url.substr(0, 7) == "file://") return true;
    auto end = url.find_first_of("?#");
    if (end != std::string_view::npos) url = url.substr(0, end);
    while (!url.empty() && url.back() == '/') url.remove_suffix(1);
    std::string lower(url.substr(url.rfind('/') == std::string_view::npos ? 0 : url.rfind('/') + 1));
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    static const char* suffixes[] = {".tar", ".gz", ".tgz", ".bz2", ".tbz", ".tbz2", ".xz", ".txz", ".lz", ".lzma",
                                     ".zst", ".zip", ".7z", ".z", ".jar", ".patch", ".diff", ".deb", ".rpm", ".gem"};
    for (const char* s : suffixes) {
        std::string_view sv(s);
        if (lower.size() > sv.size() && lower.compare(lower.size() - sv.size(), sv.size(), sv) == 0) return true;
    }
    return false;
}

namespace {

json parse_json(const HttpResponse& r, const std::string& what)
{
    try {
        return json::parse(r.body);
    } catch (const json::exception& e) {
        fail(ErrorKind::TransportError, "decode " + what + ": " + e.what());
    }
}

template <class T>
T field(const json& j, const char* key, const std::string& what)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::TransportError, "decode " + what + ": " + e.what());
    }
}

Sha1Digest sha1_field(const json& j, const char* key, const std::string& what)
{
    auto hex = field<std::string>(j, key, what);
    if (hex.size() != 40 || !is_hex(hex)) fail(ErrorKind::TransportError, "decode " + what + ": bad sha1 " + hex);
    return digest_from_hex<20>(hex);
}

Swhid swhid_field(const json& j, const char* key, const std::string& what)
{
    try {
        return parse_swhid(field<std::string>(j, key, what));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::TransportError) throw;
        fail(ErrorKind::TransportError, "decode " + what + ": " + e.what());
    }
}

bool is_absolute(std::string_view url)
{
    return url.starts_with("http://") || url.starts_with("https://");
}

std::string origin_of(const std::string& url)
{
    try {
        return split_url(url).first;
    } catch (const std::invalid_argument&) {
        return {};
    }
}

[[noreturn]] void unexpected(const HttpResponse& r, const std::string& what)
{
    fail(ErrorKind::TransportError, what + ": HTTP " + std::to_string(r.status));
}

std::optional<std::string> next_link(const HttpResponse& r)
{
    auto link = r.header("Link");
    if (!link) return std::nullopt;
    auto rel = link->find("rel=\"next\"");
    if (rel == std::string::npos) return std::nullopt;
    auto gt = link->rfind('>', rel);
    auto lt = gt == std::string::npos ? std::string::npos : link->rfind('<', gt);
    if (lt == std::string::npos) return std::nullopt;
    return link->substr(lt + 1, gt - lt - 1);
}

} // namespace

// --- ArchiveClient ----------------------------------------------------------------

ArchiveClient::ArchiveClient(ArchiveEndpoint endpoint, Transport& transport, Clock& clock)
    : endpoint_(std::move(endpoint)), transport_(transport), clock_(clock),
      limiter_(endpoint_.effective_budget(), endpoint_.rate_window, clock)
{
    while (!endpoint_.base_url.empty() && endpoint_.base_url.back() == '/') endpoint_.base_url.pop_back();
}

std::string ArchiveClient::url(const std::string& path) const
{
    return endpoint_.base_url + path;
}

HttpResponse ArchiveClient::call(const std::string& method, const std::string& path_or_url, std::string body,
                                 bool idempotent)
{
    const std::string start_url = is_absolute(path_or_url) ? path_or_url : url(path_or_url);
    const std::string api_origin = origin_of(endpoint_.base_url);
    auto backoff = endpoint_.retry_policy.initial_backoff;
    const int attempts = idempotent ? std::max(1, endpoint_.retry_policy.max_attempts) : 1;

    for (int attempt = 1;; ++attempt) {
        HttpRequest req;
        req.method = method;
        req.url = start_url;
        req.body = body;
        HttpResponse r;
        bool transport_failed = false;
        std::string failure;
        try {
            for (int hop = 0;; ++hop) {
                req.headers.clear();
                req.headers.emplace_back("Accept", "application/json");
                if (!req.body.empty()) req.headers.emplace_back("Content-Type", "application/json");
                if (endpoint_.auth_token && origin_of(req.url) == api_origin)
                    req.headers.emplace_back("Authorization", "Bearer " + *endpoint_.auth_token);
                limiter_.acquire();
                r = transport_.send(req);
                bool redirect = r.status == 301 || r.status == 302 || r.status == 303 || r.status == 307 ||
                                r.status == 308;
                auto location = r.header("Location");
                if (!redirect || !location) break;
                if (hop == 10) fail(ErrorKind::TransportError, "too many redirects from " + start_url);
                req.url = resolve_location(req.url, *location);
                if (r.status == 303 || ((r.status == 301 || r.status == 302) && req.method == "POST")) {
                    req.method = "GET";
                    req.body.clear();
                }
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TransportError) throw;
            transport_failed = true;
            failure = e.what();
        }
        if (!transport_failed) {
            if (r.status == 401 || r.status == 403)
                fail(ErrorKind::AuthRequired, method + " " + start_url + ": HTTP " + std::to_string(r.status));
            if (r.status != 429 && r.status < 500) return r;
        }
        if (attempt >= attempts) {
            if (transport_failed) fail(ErrorKind::TransportError, failure);
            if (r.status == 429) fail(ErrorKind::RateLimited, method + " " + start_url + " after " +
                                                                   std::to_string(attempt) + " attempts");
            unexpected(r, method + " " + start_url);
        }
        clock_.sleep_for(backoff);
        backoff = std::chrono::duration_cast<Clock::duration>(backoff * endpoint_.retry_policy.multiplier);
    }
}

std::map<Swhid, bool> ArchiveClient::known(const std::vector<Swhid>& ids)
{
    if (ids.empty()) fail(ErrorKind::PreconditionViolation, "known: empty identifier list");
    std::map<Swhid, bool> out;
    for (std::size_t i = 0; i < ids.size(); i += kKnownBatch) {
        json batch = json::array();
        auto end = std::min(ids.size(), i + kKnownBatch);
        for (std::size_t k = i; k < end; ++k) batch.push_back(ids[k].to_string());
        auto r = call("POST", endpoints::known, batch.dump());
        if (r.status != 200) unexpected(r, "known");
        auto j = parse_json(r, "known");
        for (std::size_t k = i; k < end; ++k) {
            auto key = ids[k].to_string();
            if (!j.contains(key)) fail(ErrorKind::TransportError, "decode known: missing " + key);
            const auto& entry = j[key];
            out[ids[k]] = entry.is_object() ? field<bool>(entry, "known", "known") : entry.get<bool>();
        }
    }
    return out;
}

Swhid ArchiveClient::resolve_extid_nar_sha256(const NarDigest& digest)
{
    auto r = call("GET", expand_path(endpoints::extid_nar_sha256, {{"hex", digest.hex()}}));
    if (r.status == 404) fail(ErrorKind::NotFound, "no ExtID nar-sha256 " + digest.hex());
    if (r.status != 200) unexpected(r, "extid");
    auto j = parse_json(r, "extid");
    auto target = swhid_field(j, "target", "extid");
    if (target.type != SwhidType::dir)
        fail(ErrorKind::TransportError, "decode extid: target is not a directory: " + target.to_string());
    return target;
}

RevisionInfo ArchiveClient::lookup_revision(const Sha1Digest& commit)
{
    auto hex = to_hex(commit);
    auto r = call("GET", expand_path(endpoints::revision, {{"sha1", hex}}));
    if (r.status == 404) fail(ErrorKind::NotFound, "no revision " + hex);
    if (r.status != 200) unexpected(r, "revision");
    auto j = parse_json(r, "revision");
    RevisionInfo info;
    info.revision = {SwhidType::rev, sha1_field(j, "id", "revision")};
    info.directory = {SwhidType::dir, sha1_field(j, "directory", "revision")};
    if (info.revision.digest != commit) fail(ErrorKind::TransportError, "decode revision: id does not match request");
    return info;
}

Sha1Digest ArchiveClient::lookup_origin_tag(const std::string& origin_url, const std::string& tag)
{
    auto r = call("GET", expand_path(endpoints::origin_latest_visit, {{"url", origin_url}}));
    if (r.status == 404) fail(ErrorKind::OriginNotFound, origin_url);
    if (r.status != 200) unexpected(r, "origin visit");
    auto visit = parse_json(r, "origin visit");
    if (!visit.contains("snapshot") || visit["snapshot"].is_null())
        fail(ErrorKind::OriginNotFound, origin_url + " has no archived snapshot");
    auto snapshot = sha1_field(visit, "snapshot", "origin visit");

    json branches = json::object();
    std::string next = expand_path(endpoints::snapshot, {{"sha1", to_hex(snapshot)}});
    for (int page = 0; !next.empty(); ++page) {
        if (page == 1000) fail(ErrorKind::TransportError, "snapshot pagination does not end");
        auto s = call("GET", next);
        if (s.status != 200) unexpected(s, "snapshot");
        auto j = parse_json(s, "snapshot");
        if (!j.contains("branches") || !j["branches"].is_object())
            fail(ErrorKind::TransportError, "decode snapshot: no branches");
        for (auto& [name, target] : j["branches"].items()) branches[name] = target;
        auto link = next_link(s);
        next = link ? resolve_location(is_absolute(next) ? next : url(next), *link) : std::string();
    }

    std::string branch = "refs/tags/" + tag;
    for (int hops = 0;; ++hops) {
        if (hops == 16 || !branches.contains(branch) || branches[branch].is_null())
            fail(ErrorKind::TagNotFound, tag + " in " + origin_url);
        const auto& b = branches[branch];
        auto type = field<std::string>(b, "target_type", "snapshot");
        if (type != "alias") break;
        branch = field<std::string>(b, "target", "snapshot");
    }
    const auto& b = branches[branch];
    auto type = field<std::string>(b, "target_type", "snapshot");
    auto target = sha1_field(b, "target", "snapshot");
    for (int hops = 0; type == "release"; ++hops) {
        if (hops == 16) fail(ErrorKind::TagNotFound, tag + ": release chain too long");
        auto rel = call("GET", expand_path(endpoints::release, {{"sha1", to_hex(target)}}));
        if (rel.status == 404) fail(ErrorKind::TagNotFound, tag + ": release " + to_hex(target) + " not archived");
        if (rel.status != 200) unexpected(rel, "release");
        auto j = parse_json(rel, "release");
        type = field<std::string>(j, "target_type", "release");
        target = sha1_field(j, "target", "release");
    }
    if (type != "revision") fail(ErrorKind::TagNotFound, tag + " points to a " + type + ", not a revision");
    return target;
}

VaultJob ArchiveClient::parse_vault(const Swhid& dir, const HttpResponse& r)
{
    auto j = parse_json(r, "vault");
    VaultJob job;
    job.target = dir;
    auto status = field<std::string>(j, "status", "vault");
    if (status == "new") job.status = VaultStatus::new_;
    else if (status == "pending") job.status = VaultStatus::pending;
    else if (status == "done") job.status = VaultStatus::done;
    else if (status == "failed") job.status = VaultStatus::failed;
    else fail(ErrorKind::TransportError, "decode vault: unknown status " + status);
    if (job.status == VaultStatus::done) job.fetch_url = field<std::string>(j, "fetch_url", "vault");
    return job;
}

VaultJob ArchiveClient::vault_request(const Swhid& dir)
{
    auto r = call("POST", expand_path(endpoints::vault_flat, {{"swhid", dir.to_string()}}), {}, false);
    if (r.status == 404) fail(ErrorKind::NotFound, dir.to_string() + " is not archived");
    if (r.status != 200) unexpected(r, "vault request");
    return parse_vault(dir, r);
}

VaultJob ArchiveClient::vault_status(const Swhid& dir)
{
    auto r = call("GET", expand_path(endpoints::vault_flat, {{"swhid", dir.to_string()}}));
    if (r.status == 404) return VaultJob{dir, VaultFlavor::flat, VaultStatus::new_, std::nullopt};
    if (r.status != 200) unexpected(r, "vault status");
    return parse_vault(dir, r);
}

NarNode ArchiveClient::vault_fetch(const Swhid& dir, Clock::duration poll_interval, Clock::duration deadline)
{
    if (deadline <= Clock::duration::zero()) fail(ErrorKind::PreconditionViolation, "vault_fetch: deadline must be positive");
    if (dir.type != SwhidType::dir) fail(ErrorKind::PreconditionViolation, "vault_fetch: not a directory SWHID");
    auto start = clock_.now();
    auto job = vault_status(dir);
    if (job.status == VaultStatus::new_) job = vault_request(dir);
    while (job.status != VaultStatus::done) {
        if (job.status == VaultStatus::failed) fail(ErrorKind::CookingFailed, dir.to_string());
        if (clock_.now() - start >= deadline)
            fail(ErrorKind::DeadlineExceeded, dir.to_string() + ": last status " + std::string(to_string(job.status)));
        clock_.sleep_for(poll_interval);
        job = vault_status(dir);
    }
    auto r = call("GET", *job.fetch_url);
    if (r.status != 200) unexpected(r, "vault download");
    try {
        return unpack_vault_bundle(as_bytes(r.body));
    } catch (const Error& e) {
        fail(ErrorKind::TransportError, "vault bundle for " + dir.to_string() + ": " + e.what());
    }
}

SaveRequest ArchiveClient::save_code_now(const std::string& origin_url, VisitType type)
{
    if (looks_like_file_url(origin_url))
        fail(ErrorKind::PreconditionViolation, "Save Code Now only accepts repository URLs: " + origin_url);
    auto r = call("POST", expand_path(endpoints::save, {{"type", std::string(to_string(type))}, {"url", origin_url}}));
    if (r.status == 400) fail(ErrorKind::Rejected, origin_url + ": " + r.body);
    if (r.status != 200) unexpected(r, "save");
    auto j = parse_json(r, "save");
    auto request_status = field<std::string>(j, "save_request_status", "save");
    std::string task_status =
        j.contains("save_task_status") && j["save_task_status"].is_string() ? j["save_task_status"].get<std::string>() : "";
    SaveRequest out{origin_url, type, SaveStatus::pending};
    if (request_status == "rejected") fail(ErrorKind::Rejected, origin_url);
    if (task_status == "succeeded") out.status = SaveStatus::succeeded;
    else if (task_status == "failed") out.status = SaveStatus::failed;
    else if (request_status == "accepted") out.status = SaveStatus::accepted;
    else if (request_status == "pending") out.status = SaveStatus::pending;
    else fail(ErrorKind::TransportError, "decode save: unknown status " + request_status);
    return out;
}

Bytes ArchiveClient::fetch_content(const Swhid& cnt)
{
    if (cnt.type != SwhidType::cnt) fail(ErrorKind::PreconditionViolation, "fetch_content: not a content SWHID");
    auto r = call("GET", expand_path(endpoints::content_raw, {{"sha1", to_hex(cnt.digest)}}));
    if (r.status == 404) fail(ErrorKind::NotFound, cnt.to_string() + " is not archived");
    if (r.status != 200) unexpected(r, "content");
    Bytes data = to_bytes(r.body);
    if (swhid_for_content(data) != cnt) fail(ErrorKind::TransportError, "content for " + cnt.to_string() + " does not match");
    return data;
}

std::optional<Swhid> ArchiveClient::lookup_content_sha256(const Sha256Digest& digest)
{
    auto r = call("GET", expand_path(endpoints::content_sha256, {{"hex", to_hex(digest)}}));
    if (r.status == 404) return std::nullopt;
    if (r.status != 200) unexpected(r, "content");
    auto j = parse_json(r, "content");
    if (!j.contains("checksums")) fail(ErrorKind::TransportError, "decode content: no checksums");
    return Swhid{SwhidType::cnt, sha1_field(j["checksums"], "sha1_git", "content")};
}

NarNode unpack_vault_bundle(ByteView bundle)
{
    auto dec = compress::decompress(bundle);
    auto parsed = tar::parse_tarball(dec.payload);
    const auto& entries = parsed.tree.entries();
    if (entries.size() == 1 && entries[0].second.is_directory()) return entries[0].second;
    return std::move(parsed.tree);
}

NarNode VaultContentProvider::fetch(const ContentLeaf& leaf)
{
    std::string errors;
    auto try_all = [&](const std::vector<Swhid>& addresses, auto&& get) -> std::optional<NarNode> {
        for (const auto& a : addresses) {
            try {
                return get(a);
            } catch (const Error& e) {
                errors += std::string(errors.empty() ? "" : "; ") + e.what();
            }
        }
        return std::nullopt;
    };
    std::optional<NarNode> got;
    if (auto* d = std::get_if<DirectoryRef>(&leaf))
        got = try_all(d->addresses, [&](const Swhid& a) { return client_.vault_fetch(a, poll_interval_, deadline_); });
    else
        got = try_all(std::get<ContentRef>(leaf).addresses,
                      [&](const Swhid& a) { return NarNode::regular(client_.fetch_content(a)); });
    if (!got) fail(ErrorKind::ContentUnavailable, errors.empty() ? "no addresses" : errors);
    return std::move(*got);
}

} // namespace revive
