#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "revive/fetch.hpp"
#include "revive/heritage.hpp"
#include "revive/source.hpp"

namespace revive::audit {

enum class RotStatus { available, missing, hash_mismatch, skipped };
enum class CoverageStatus { stored, missing, undetermined };
std::string_view to_string(RotStatus s);
std::string_view to_string(CoverageStatus s);

/// What an upstream download produced.
struct Artifact {
    std::optional<Bytes> file;
    std::optional<NarNode> tree;
    std::string url;
};

struct RotResult {
    RotStatus status = RotStatus::missing;
    /// Set whenever bytes were obtained, even when they fail verification.
    std::optional<Artifact> artifact;
};

struct AuditRecord {
    SourceRecord source;
    std::string snapshot_label;
    RotStatus rot = RotStatus::skipped;
    /// Empty when the source could not be processed; several for svn
    /// sub-directory sets.
    std::vector<Swhid> swhids;
    CoverageStatus coverage = CoverageStatus::undetermined;
};

/// Downloads from upstream only (no archive fallback) and verifies.
RotResult classify_rot(const SourceRecord& record, Fetcher& fetcher);

/// Identifiers under which the archive would hold the artifact. Empty when
/// the artifact cannot be processed (unsupported compression, ...).
std::vector<Swhid> compute_swhids(const SourceRecord& record, const Artifact& artifact);

/// Rot classification and identifier computation for every record, with
/// at most `parallelism` downloads in flight. Results are in input order.
std::vector<AuditRecord> scan(const std::vector<SourceRecord>& records, Fetcher& fetcher, const std::string& label,
                              std::size_t parallelism = 8);

/// Fills in coverage with bulk `known` queries. Client errors propagate and
/// leave `records` untouched.
void coverage(std::vector<AuditRecord>& records, ArchiveClient& client);

enum class HighType { vcs, download };
enum class VcsType { git, svn, other };
enum class DownloadType { tar_gz, tar_xz, tar_bz2, tar, zip, text, other };
DownloadType classify_download(std::string_view url);

struct Census {
    std::array<std::size_t, 2> high{};
    std::array<std::size_t, 3> vcs{};
    std::array<std::size_t, 7> download{};
};

Census census(const std::vector<SourceRecord>& records);

struct SnapshotReport {
    std::string label;
    std::string date;
    std::size_t total = 0;
    std::map<RotStatus, std::size_t> rot;
    std::map<CoverageStatus, std::size_t> coverage;
    Census types;

    double rot_fraction(RotStatus s) const;
    double coverage_fraction(CoverageStatus s) const;
};

SnapshotReport report(const std::vector<AuditRecord>& records, std::string label, std::string date);

/// CSV writers; one row per snapshot, header first.
std::string rot_csv(const std::vector<SnapshotReport>& reports);
std::string coverage_csv(const std::vector<SnapshotReport>& reports);
std::string census_csv(const std::vector<SnapshotReport>& reports);

/// Transitive dependents plus the package itself, per source. `edges` are
/// (dependent, dependency) package pairs; sources map to packages through
/// SourceRecord::package. Throws Error(CycleDetected).
std::vector<std::size_t> impact_rank(const std::vector<SourceRecord>& records,
                                     const std::vector<std::pair<std::string, std::string>>& edges);

/// Parses `dependent,dependency` lines (an optional header line is skipped).
std::vector<std::pair<std::string, std::string>> read_edges_csv(std::string_view text);

} // namespace revive::audit
