#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "revive/disarchive.hpp"
#include "revive/nar.hpp"
#include "revive/swhid.hpp"
#include "revive/transport.hpp"

namespace revive {

class Clock {
public:
    using time_point = std::chrono::steady_clock::time_point;
    using duration = std::chrono::steady_clock::duration;

    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_for(duration d) = 0;
};

class SystemClock : public Clock {
public:
    time_point now() override;
    void sleep_for(duration d) override;
};

/// Time only moves when someone sleeps.
class ManualClock : public Clock {
public:
    time_point now() override;
    void sleep_for(duration d) override;
    void advance(duration d);

private:
    std::mutex mutex_;
    time_point now_{};
};

/// Fixed-window limiter: at most `budget` acquisitions per window.
class RateLimiter {
public:
    RateLimiter(std::size_t budget, Clock::duration window, Clock& clock);
    void acquire();

private:
    std::size_t budget_;
    Clock::duration window_;
    Clock& clock_;
    std::mutex mutex_;
    Clock::time_point window_start_{};
    std::size_t used_ = 0;
    bool started_ = false;
};

struct RetryPolicy {
    int max_attempts = 3;
    Clock::duration initial_backoff = std::chrono::seconds(1);
    double multiplier = 2.0;
};

struct ArchiveEndpoint {
    std::string base_url = "https://archive.softwareheritage.org";
    std::optional<std::string> auth_token;
    /// Requests per window; 0 picks the archive's default for the
    /// authentication mode.
    std::size_t rate_budget = 0;
    Clock::duration rate_window = std::chrono::hours(1);
    RetryPolicy retry_policy;

    std::size_t effective_budget() const { return rate_budget ? rate_budget : auth_token ? 1200 : 120; }
};

/// API paths relative to the endpoint base URL.
namespace endpoints {
inline constexpr const char* known = "/api/1/known/";
inline constexpr const char* extid_nar_sha256 = "/api/1/extid/nar-sha256/hex:{hex}/";
inline constexpr const char* revision = "/api/1/revision/{sha1}/";
inline constexpr const char* release = "/api/1/release/{sha1}/";
inline constexpr const char* origin_latest_visit = "/api/1/origin/{url}/visit/latest/?require_snapshot=true";
inline constexpr const char* snapshot = "/api/1/snapshot/{sha1}/";
inline constexpr const char* vault_flat = "/api/1/vault/flat/{swhid}/";
inline constexpr const char* save = "/api/1/origin/save/{type}/url/{url}/";
inline constexpr const char* content_raw = "/api/1/content/sha1_git:{sha1}/raw/";
inline constexpr const char* content_sha256 = "/api/1/content/sha256:{hex}/";
}

/// Substitutes `{key}` placeholders.
std::string expand_path(std::string_view tmpl, const std::map<std::string, std::string>& values);

inline constexpr std::size_t kKnownBatch = 1000;

enum class VaultFlavor { flat, git_bare };
enum class VaultStatus { new_, pending, done, failed };
std::string_view to_string(VaultStatus s);

struct VaultJob {
    Swhid target;
    VaultFlavor flavor = VaultFlavor::flat;
    VaultStatus status = VaultStatus::new_;
    std::optional<std::string> fetch_url;
};

enum class VisitType { git, svn, hg };
std::string_view to_string(VisitType t);
VisitType visit_type_from_string(std::string_view s);

enum class SaveStatus { accepted, rejected, pending, succeeded, failed };
std::string_view to_string(SaveStatus s);

struct SaveRequest {
    std::string origin_url;
    VisitType visit_type = VisitType::git;
    SaveStatus status = SaveStatus::pending;
};

struct RevisionInfo {
    Swhid revision;
    Swhid directory;
};

/// True for URLs that name a single file (tarballs, patches, ...) rather
/// than a repository.
bool looks_like_file_url(std::string_view url);

class ArchiveClient {
public:
    ArchiveClient(ArchiveEndpoint endpoint, Transport& transport, Clock& clock);

    const ArchiveEndpoint& endpoint() const { return endpoint_; }

    std::map<Swhid, bool> known(const std::vector<Swhid>& ids);
    Swhid resolve_extid_nar_sha256(const NarDigest& digest);
    RevisionInfo lookup_revision(const Sha1Digest& commit);
    Sha1Digest lookup_origin_tag(const std::string& origin_url, const std::string& tag);
    VaultJob vault_request(const Swhid& dir);
    VaultJob vault_status(const Swhid& dir);
    NarNode vault_fetch(const Swhid& dir, Clock::duration poll_interval, Clock::duration deadline);
    SaveRequest save_code_now(const std::string& origin_url, VisitType type);
    Bytes fetch_content(const Swhid& cnt);
    /// cnt SWHID of an archived blob with that sha256, if any.
    std::optional<Swhid> lookup_content_sha256(const Sha256Digest& digest);

private:
    HttpResponse call(const std::string& method, const std::string& path_or_url, std::string body = {},
                      bool idempotent = true);
    std::string url(const std::string& path) const;
    VaultJob parse_vault(const Swhid& dir, const HttpResponse& r);

    ArchiveEndpoint endpoint_;
    Transport& transport_;
    Clock& clock_;
    RateLimiter limiter_;
};

/// Unpacks a Vault "flat" bundle (a tar.gz whose single top-level directory
/// holds the tree).
NarNode unpack_vault_bundle(ByteView bundle);

/// Content provider backed by the archive: Vault cooking for directories,
/// raw content download for files. Addresses are tried in order.
class VaultContentProvider : public ContentProvider {
public:
    VaultContentProvider(ArchiveClient& client, Clock::duration poll_interval, Clock::duration deadline)
        : client_(client), poll_interval_(poll_interval), deadline_(deadline)
    {
    }
    NarNode fetch(const ContentLeaf& leaf) override;

private:
    ArchiveClient& client_;
    Clock::duration poll_interval_;
    Clock::duration deadline_;
};

} // namespace revive
