#pragma once

#include <optional>
#include <string>
#include <vector>

#include "revive/disarchive.hpp"
#include "revive/error.hpp"
#include "revive/fetch.hpp"
#include "revive/heritage.hpp"
#include "revive/source.hpp"

namespace revive {

enum class Provenance { upstream, swh_extid, swh_revision, swh_tag, disarchive_rebuild };
std::string_view to_string(Provenance p);

/// One failed rung of the ladder.
struct Attempt {
    Provenance rung;
    /// URL, SWHID or digest the rung worked on.
    std::string subject;
    ErrorKind kind;
    std::string message;
};

struct Resolution {
    Provenance provenance = Provenance::upstream;
    /// url sources.
    std::optional<Bytes> file;
    /// VCS sources.
    std::optional<NarNode> tree;
    bool verified = false;
    /// Rungs that failed before this one succeeded.
    std::vector<Attempt> trail;
};

/// AllPathsFailed carrying every failed attempt.
class ResolutionFailure : public Error {
public:
    ResolutionFailure(ErrorKind kind, const std::string& message, std::vector<Attempt> trail)
        : Error(kind, message), trail_(std::move(trail))
    {
    }
    const std::vector<Attempt>& trail() const { return trail_; }

private:
    std::vector<Attempt> trail_;
};

struct ResolverOptions {
    Clock::duration poll_interval = std::chrono::seconds(10);
    Clock::duration vault_deadline = std::chrono::hours(1);
};

/// Runs the recovery ladder: upstream, nar-sha256 ExtID, revision, tag,
/// then rebuild from a description. `client` and `db` may be null to skip
/// the rungs that need them. Throws ResolutionFailure(AllPathsFailed) or
/// Error(UnsupportedCombination) for svn sub-directory sets known only by
/// their combined digest once upstream has failed.
Resolution resolve(const SourceRecord& record, ArchiveClient* client, DescriptionDb* db, Fetcher& fetcher,
                   const ResolverOptions& options = {});

enum class ArchivalStatus { archived, not_archived, save_requested };
std::string_view to_string(ArchivalStatus s);

struct ArchivalCheck {
    ArchivalStatus status = ArchivalStatus::not_archived;
    std::optional<Swhid> swhid;
    std::optional<SaveRequest> save;
    std::string note;
};

/// Checks whether `record` is archived; unarchived VCS origins get a Save
/// Code Now request, unarchived files are only reported.
ArchivalCheck check_archival(const SourceRecord& record, ArchiveClient& client, DescriptionDb* db = nullptr);

} // namespace revive
