#include "revive/audit.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <set>
#include <thread>

#include "revive/disarchive.hpp"
#include "revive/error.hpp"
#include "revive/resolver.hpp"

namespace revive::audit {

std::string_view to_string(RotStatus s)
{
    switch (s) {
    case RotStatus::available: return "available";
    case RotStatus::missing: return "missing";
    case RotStatus::hash_mismatch: return "hash-mismatch";
    case RotStatus::skipped: return "skipped";
    }
    return "?";
}

std::string_view to_string(CoverageStatus s)
{
    switch (s) {
    case CoverageStatus::stored: return "stored";
    case CoverageStatus::missing: return "missing";
    case CoverageStatus::undetermined: return "undetermined";
    }
    return "?";
}

RotResult classify_rot(const SourceRecord& record, Fetcher& fetcher)
{
    RotResult out;
    if (record.method == FetchMethod::hg) {
        out.status = RotStatus::skipped;
        return out;
    }
    try {
        auto res = resolve(record, nullptr, nullptr, fetcher);
        out.status = RotStatus::available;
        Artifact a;
        a.file = std::move(res.file);
        a.tree = std::move(res.tree);
        out.artifact = std::move(a);
    } catch (const ResolutionFailure& f) {
        bool tampered = std::any_of(f.trail().begin(), f.trail().end(),
                                    [](const Attempt& a) { return a.kind == ErrorKind::HashMismatch; });
        out.status = tampered ? RotStatus::hash_mismatch : RotStatus::missing;
    } catch (const Error&) {
        out.status = RotStatus::missing;
    }
    return out;
}

namespace {

std::string file_name_of(std::string_view url)
{
    auto end = url.find_first_of("?#");
    if (end != std::string_view::npos) url = url.substr(0, end);
    auto slash = url.rfind('/');
    return std::string(slash == std::string_view::npos ? url : url.substr(slash + 1));
}

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

} // namespace

std::vector<Swhid> compute_swhids(const SourceRecord& record, const Artifact& artifact)
{
    std::vector<Swhid> out;
    try {
        if (artifact.file) {
            auto d = disassemble(*artifact.file, file_name_of(artifact.url.empty() ? record.urls[0] : artifact.url));
            if (auto* dir = std::get_if<DirectoryRef>(&d.description.leaf)) out.push_back(dir->addresses.at(0));
            else out.push_back(swhid_for_content(*artifact.file));
        } else if (artifact.tree) {
            if (record.method == FetchMethod::svn && !record.svn_subdirs.empty()) {
                for (const auto& sub : record.svn_subdirs) {
                    const NarNode* n = artifact.tree->lookup(sub);
                    if (!n) return {};
                    out.push_back(n->is_directory() ? swhid_for_directory(*n) : swhid_for_content(n->contents()));
                }
            } else {
                out.push_back(swhid_for_directory(*artifact.tree));
            }
        }
    } catch (const Error&) {
        return {};
    }
    return out;
}

std::vector<AuditRecord> scan(const std::vector<SourceRecord>& records, Fetcher& fetcher, const std::string& label,
                              std::size_t parallelism)
{
    std::vector<AuditRecord> out(records.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < records.size();) {
            auto& rec = out[i];
            rec.source = records[i];
            rec.snapshot_label = label;
            auto rot = classify_rot(records[i], fetcher);
            rec.rot = rot.status;
            if (rot.artifact) rec.swhids = compute_swhids(records[i], *rot.artifact);
        }
    };
    std::size_t n = std::max<std::size_t>(1, std::min(parallelism, records.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

void coverage(std::vector<AuditRecord>& records, ArchiveClient& client)
{
    std::set<Swhid> unique;
    for (const auto& r : records) unique.insert(r.swhids.begin(), r.swhids.end());
    std::map<Swhid, bool> known;
    if (!unique.empty()) known = client.known(std::vector<Swhid>(unique.begin(), unique.end()));
    for (auto& r : records) {
        if (r.swhids.empty()) {
            r.coverage = CoverageStatus::undetermined;
            continue;
        }
        bool all = std::all_of(r.swhids.begin(), r.swhids.end(), [&](const Swhid& s) { return known.at(s); });
        r.coverage = all ? CoverageStatus::stored : CoverageStatus::missing;
    }
}

DownloadType classify_download(std::string_view url)
{
    std::string name = file_name_of(url);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ends_with(name, ".tar.gz") || ends_with(name, ".tgz")) return DownloadType::tar_gz;
    if (ends_with(name, ".tar.xz") || ends_with(name, ".txz")) return DownloadType::tar_xz;
    if (ends_with(name, ".tar.bz2") || ends_with(name, ".tbz2") || ends_with(name, ".tbz")) return DownloadType::tar_bz2;
    if (ends_with(name, ".tar")) return DownloadType::tar;
    if (ends_with(name, ".zip")) return DownloadType::zip;
    static const char* text[] = {".patch", ".diff", ".txt", ".el",  ".scm", ".lisp", ".py",  ".pl", ".sh", ".rb",
                                 ".c",     ".h",    ".js",  ".json", ".xml", ".html", ".tex", ".sty", ".md", ".rst"};
    for (const char* t : text)
        if (ends_with(name, t)) return DownloadType::text;
    return DownloadType::other;
}

Census census(const std::vector<SourceRecord>& records)
{
    Census c;
    for (const auto& r : records) {
        if (is_vcs(r.method)) {
            ++c.high[static_cast<int>(HighType::vcs)];
            auto v = r.method == FetchMethod::git ? VcsType::git : r.method == FetchMethod::svn ? VcsType::svn : VcsType::other;
            ++c.vcs[static_cast<int>(v)];
        } else {
            ++c.high[static_cast<int>(HighType::download)];
            ++c.download[static_cast<int>(classify_download(r.urls.empty() ? "" : r.urls[0]))];
        }
    }
    return c;
}

double SnapshotReport::rot_fraction(RotStatus s) const
{
    auto it = rot.find(s);
    return total && it != rot.end() ? static_cast<double>(it->second) / static_cast<double>(total) : 0.0;
}

double SnapshotReport::coverage_fraction(CoverageStatus s) const
{
    auto it = coverage.find(s);
    return total && it != coverage.end() ? static_cast<double>(it->second) / static_cast<double>(total) : 0.0;
}

SnapshotReport report(const std::vector<AuditRecord>& records, std::string label, std::string date)
{
    SnapshotReport r;
    r.label = std::move(label);
    r.date = std::move(date);
    r.total = records.size();
    for (auto s : {RotStatus::available, RotStatus::missing, RotStatus::hash_mismatch, RotStatus::skipped}) r.rot[s] = 0;
    for (auto s : {CoverageStatus::stored, CoverageStatus::missing, CoverageStatus::undetermined}) r.coverage[s] = 0;
    std::vector<SourceRecord> sources;
    for (const auto& a : records) {
        ++r.rot[a.rot];
        ++r.coverage[a.coverage];
        sources.push_back(a.source);
    }
    r.types = census(sources);
    return r;
}

namespace {

std::string num(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double rel(std::size_t part, std::size_t whole)
{
    return whole ? static_cast<double>(part) / static_cast<double>(whole) : 0.0;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string date_of(const SnapshotReport& r)
{
    return csv_field(r.date.empty() ? r.label : r.date);
}

} // namespace

std::string rot_csv(const std::vector<SnapshotReport>& reports)
{
    std::string out = "date,available-rel,missing-rel,hash-mismatch-rel,skipped-rel,available,missing,hash-mismatch,skipped,total,label\n";
    for (const auto& r : reports) {
        out += date_of(r);
        for (auto s : {RotStatus::available, RotStatus::missing, RotStatus::hash_mismatch, RotStatus::skipped})
            out += "," + num(r.rot_fraction(s));
        for (auto s : {RotStatus::available, RotStatus::missing, RotStatus::hash_mismatch, RotStatus::skipped})
            out += "," + std::to_string(r.rot.at(s));
        out += "," + std::to_string(r.total) + "," + csv_field(r.label) + "\n";
    }
    return out;
}

std::string coverage_csv(const std::vector<SnapshotReport>& reports)
{
    std::string out = "date,stored-rel,missing-rel,unknown-rel,stored,missing,unknown,total,label\n";
    for (const auto& r : reports) {
        out += date_of(r);
        for (auto s : {CoverageStatus::stored, CoverageStatus::missing, CoverageStatus::undetermined})
            out += "," + num(r.coverage_fraction(s));
        for (auto s : {CoverageStatus::stored, CoverageStatus::missing, CoverageStatus::undetermined})
            out += "," + std::to_string(r.coverage.at(s));
        out += "," + std::to_string(r.total) + "," + csv_field(r.label) + "\n";
    }
    return out;
}

std::string census_csv(const std::vector<SnapshotReport>& reports)
{
    std::string out = "date,vcs-rel,download-rel,git-rel,svn-rel,vcs-other-rel,tar-gz-rel,tar-xz-rel,tar-bz2-rel,"
                      "tar-rel,zip-rel,text-rel,other-rel,total,label\n";
    for (const auto& r : reports) {
        const auto& t = r.types;
        std::size_t vcs = t.high[0], dl = t.high[1];
        out += date_of(r);
        for (auto c : t.high) out += "," + num(rel(c, r.total));
        for (auto c : t.vcs) out += "," + num(rel(c, vcs));
        for (auto c : t.download) out += "," + num(rel(c, dl));
        out += "," + std::to_string(r.total) + "," + csv_field(r.label) + "\n";
    }
    return out;
}

std::vector<std::size_t> impact_rank(const std::vector<SourceRecord>& records,
                                     const std::vector<std::pair<std::string, std::string>>& edges)
{
    std::map<std::string, std::size_t> id;
    auto node = [&](const std::string& name) {
        auto [it, inserted] = id.emplace(name, id.size());
        return it->second;
    };
    for (const auto& [a, b] : edges) {
        node(a);
        node(b);
    }
    std::vector<std::vector<std::size_t>> depends_on(id.size()), dependents(id.size());
    for (const auto& [a, b] : edges) {
        depends_on[id[a]].push_back(id[b]);
        dependents[id[b]].push_back(id[a]);
    }

    // Iterative three-colour DFS over the dependency direction.
    std::vector<int> colour(id.size(), 0);
    std::vector<std::string> names(id.size());
    for (const auto& [n, i] : id) names[i] = n;
    for (std::size_t s = 0; s < id.size(); ++s) {
        if (colour[s]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{s, 0}};
        colour[s] = 1;
        while (!stack.empty()) {
            auto& [v, k] = stack.back();
            if (k < depends_on[v].size()) {
                auto w = depends_on[v][k++];
                if (colour[w] == 1) fail(ErrorKind::CycleDetected, "dependency cycle through " + names[w]);
                if (colour[w] == 0) {
                    colour[w] = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                colour[v] = 2;
                stack.pop_back();
            }
        }
    }

    std::map<std::size_t, std::size_t> cache;
    auto closure = [&](std::size_t start) {
        if (auto it = cache.find(start); it != cache.end()) return it->second;
        std::vector<char> seen(id.size(), 0);
        std::vector<std::size_t> todo{start};
        seen[start] = 1;
        std::size_t count = 0;
        while (!todo.empty()) {
            auto v = todo.back();
            todo.pop_back();
            ++count;
            for (auto w : dependents[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    todo.push_back(w);
                }
        }
        return cache[start] = count;
    };

    std::vector<std::size_t> out;
    for (const auto& r : records) {
        auto it = r.package.empty() ? id.end() : id.find(r.package);
        out.push_back(it == id.end() ? 1 : closure(it->second));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> read_edges_csv(std::string_view text)
{
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return std::string(s);
    };
    std::vector<std::pair<std::string, std::string>> out;
    bool first = true;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto comma = t.find(',');
        if (comma == std::string::npos) fail(ErrorKind::PreconditionViolation, "edge line without a comma: " + t);
        std::pair<std::string, std::string> e{trim(std::string_view(t).substr(0, comma)), trim(std::string_view(t).substr(comma + 1))};
        if (first && e.first == "dependent" && e.second == "dependency") {
            first = false;
            continue;
        }
        first = false;
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace revive::audit
