#include "revive/resolver.hpp"

namespace revive {

std::string_view to_string(Provenance p)
{
    switch (p) {
    case Provenance::upstream: return "upstream";
    case Provenance::swh_extid: return "swh-extid";
    case Provenance::swh_revision: return "swh-revision";
    case Provenance::swh_tag: return "swh-tag";
    case Provenance::disarchive_rebuild: return "disarchive-rebuild";
    }
    return "?";
}

std::string_view to_string(ArchivalStatus s)
{
    switch (s) {
    case ArchivalStatus::archived: return "archived";
    case ArchivalStatus::not_archived: return "not-archived";
    case ArchivalStatus::save_requested: return "save-requested";
    }
    return "?";
}

namespace {

/// Places `child` at a '/'-separated path below `root`, creating
/// intermediate directories.
void place_at(NarNode& root, std::string_view path, NarNode child)
{
    NarNode* dir = &root;
    for (;;) {
        while (!path.empty() && path.front() == '/') path.remove_prefix(1);
        auto slash = path.find('/');
        if (slash == std::string_view::npos || path.substr(slash).find_first_not_of('/') == std::string_view::npos) {
            auto name = path.substr(0, slash);
            if (name.empty()) {
                root = std::move(child);
                return;
            }
            dir->set(std::string(name), std::move(child));
            return;
        }
        std::string name(path.substr(0, slash));
        NarNode* next = dir->find(name);
        if (!next || !next->is_directory()) next = &dir->set(name, NarNode::directory());
        dir = next;
        path.remove_prefix(slash + 1);
    }
}

std::string join_url(const std::string& base, const std::string& sub)
{
    std::string out = base;
    while (!out.empty() && out.back() == '/') out.pop_back();
    return out + "/" + sub;
}

class Ladder {
public:
    Ladder(const SourceRecord& r, ArchiveClient* client, DescriptionDb* db, Fetcher& fetcher, const ResolverOptions& o)
        : r_(r), client_(client), db_(db), fetcher_(fetcher), options_(o)
    {
    }

    Resolution run();

private:
    bool combined_svn() const
    {
        return r_.method == FetchMethod::svn && !r_.svn_subdirs.empty() && r_.svn_subdir_digests.empty();
    }

    void note(Provenance rung, std::string subject, const Error& e)
    {
        trail_.push_back({rung, std::move(subject), e.kind(), e.what()});
    }

    void mismatch(Provenance rung, std::string subject, const std::string& expected, const std::string& actual)
    {
        trail_.push_back({rung, std::move(subject), ErrorKind::HashMismatch,
                          "HashMismatch: expected " + expected + ", got " + actual});
    }

    bool tree_ok(Provenance rung, const std::string& subject, const NarNode& tree, const NarDigest& expected)
    {
        auto got = nar_hash(tree);
        if (got.bytes == expected.bytes) return true;
        mismatch(rung, subject, expected.hex(), got.hex());
        return false;
    }

    /// Checks a composed svn tree (or a whole checkout) against the
    /// record's digests.
    bool checkout_ok(Provenance rung, const std::string& subject, const NarNode& tree)
    {
        if (!r_.svn_subdir_digests.empty()) {
            for (std::size_t i = 0; i < r_.svn_subdirs.size(); ++i) {
                const NarNode* sub = tree.lookup(r_.svn_subdirs[i]);
                if (!sub) {
                    mismatch(rung, subject + "/" + r_.svn_subdirs[i], r_.svn_subdir_digests[i].hex(), "(absent)");
                    return false;
                }
                if (!tree_ok(rung, subject + "/" + r_.svn_subdirs[i], *sub, r_.svn_subdir_digests[i])) return false;
            }
            return true;
        }
        return tree_ok(rung, subject, tree, *r_.nar_sha256);
    }

    Resolution success(Provenance p, NarNode tree)
    {
        Resolution res;
        res.provenance = p;
        res.tree = std::move(tree);
        res.verified = true;
        res.trail = std::move(trail_);
        return res;
    }

    Resolution success(Provenance p, Bytes file)
    {
        Resolution res;
        res.provenance = p;
        res.file = std::move(file);
        res.verified = true;
        res.trail = std::move(trail_);
        return res;
    }

    NarNode vault(const Swhid& dir)
    {
        return client_->vault_fetch(dir, options_.poll_interval, options_.vault_deadline);
    }

    std::optional<Resolution> upstream();
    std::optional<Resolution> extid();
    std::optional<Resolution> revision(const Sha1Digest& commit, Provenance rung, const std::string& subject);
    std::optional<Resolution> tag();
    std::optional<Resolution> rebuild();

    const SourceRecord& r_;
    ArchiveClient* client_;
    DescriptionDb* db_;
    Fetcher& fetcher_;
    const ResolverOptions& options_;
    std::vector<Attempt> trail_;
};

std::optional<Resolution> Ladder::upstream()
{
    for (const auto& url : r_.urls) {
        try {
            switch (r_.method) {
            case FetchMethod::url: {
                Bytes data = fetcher_.fetch_file(url);
                auto got = sha256(data);
                if (got == *r_.file_sha256) return success(Provenance::upstream, std::move(data));
                mismatch(Provenance::upstream, url, to_hex(*r_.file_sha256), to_hex(got));
                break;
            }
            case FetchMethod::git: {
                NarNode tree = fetcher_.fetch_git(url, *r_.git_ref);
                if (tree_ok(Provenance::upstream, url, tree, *r_.nar_sha256))
                    return success(Provenance::upstream, std::move(tree));
                break;
            }
            case FetchMethod::svn: {
                NarNode tree = NarNode::directory();
                if (r_.svn_subdirs.empty()) {
                    tree = fetcher_.fetch_svn(url, *r_.svn_revision);
                } else {
                    for (const auto& sub : r_.svn_subdirs)
                        place_at(tree, sub, fetcher_.fetch_svn(join_url(url, sub), *r_.svn_revision));
                }
                if (checkout_ok(Provenance::upstream, url, tree)) return success(Provenance::upstream, std::move(tree));
                break;
            }
            case FetchMethod::hg: {
                NarNode tree = fetcher_.fetch_hg(url);
                if (tree_ok(Provenance::upstream, url, tree, *r_.nar_sha256))
                    return success(Provenance::upstream, std::move(tree));
                break;
            }
            }
        } catch (const Error& e) {
            note(Provenance::upstream, url, e);
        }
    }
    return std::nullopt;
}

std::optional<Resolution> Ladder::extid()
{
    if (combined_svn()) {
        trail_.push_back({Provenance::swh_extid, r_.urls[0], ErrorKind::UnsupportedCombination,
                          "UnsupportedCombination: the archive holds the sub-directories only individually"});
        return std::nullopt;
    }
    if (!r_.svn_subdir_digests.empty()) {
        NarNode tree = NarNode::directory();
        for (std::size_t i = 0; i < r_.svn_subdirs.size(); ++i) {
            const auto& digest = r_.svn_subdir_digests[i];
            try {
                NarNode sub = vault(client_->resolve_extid_nar_sha256(digest));
                if (!tree_ok(Provenance::swh_extid, "nar-sha256:" + digest.hex(), sub, digest)) return std::nullopt;
                place_at(tree, r_.svn_subdirs[i], std::move(sub));
            } catch (const Error& e) {
                note(Provenance::swh_extid, "nar-sha256:" + digest.hex(), e);
                return std::nullopt;
            }
        }
        return success(Provenance::swh_extid, std::move(tree));
    }
    const std::string subject = "nar-sha256:" + r_.nar_sha256->hex();
    try {
        NarNode tree = vault(client_->resolve_extid_nar_sha256(*r_.nar_sha256));
        if (tree_ok(Provenance::swh_extid, subject, tree, *r_.nar_sha256))
            return success(Provenance::swh_extid, std::move(tree));
    } catch (const Error& e) {
        note(Provenance::swh_extid, subject, e);
    }
    return std::nullopt;
}

std::optional<Resolution> Ladder::revision(const Sha1Digest& commit, Provenance rung, const std::string& subject)
{
    try {
        auto info = client_->lookup_revision(commit);
        NarNode tree = vault(info.directory);
        if (tree_ok(rung, subject, tree, *r_.nar_sha256)) return success(rung, std::move(tree));
    } catch (const Error& e) {
        note(rung, subject, e);
    }
    return std::nullopt;
}

std::optional<Resolution> Ladder::tag()
{
    for (const auto& url : r_.urls) {
        const std::string subject = url + " tag " + *r_.git_ref->tag;
        Sha1Digest commit;
        try {
            commit = client_->lookup_origin_tag(url, *r_.git_ref->tag);
        } catch (const Error& e) {
            note(Provenance::swh_tag, subject, e);
            continue;
        }
        if (auto res = revision(commit, Provenance::swh_tag, subject)) return res;
    }
    return std::nullopt;
}

std::optional<Resolution> Ladder::rebuild()
{
    const std::string subject = "sha256:" + to_hex(*r_.file_sha256);
    try {
        auto desc = description_db_lookup(*r_.file_sha256, *db_);
        if (!client_) fail(ErrorKind::ContentUnavailable, "no archive client to fetch the contents");
        VaultContentProvider provider(*client_, options_.poll_interval, options_.vault_deadline);
        Bytes data = assemble(desc, provider);
        auto got = sha256(data);
        if (got == *r_.file_sha256) return success(Provenance::disarchive_rebuild, std::move(data));
        mismatch(Provenance::disarchive_rebuild, subject, to_hex(*r_.file_sha256), to_hex(got));
    } catch (const Error& e) {
        note(Provenance::disarchive_rebuild, subject, e);
    }
    return std::nullopt;
}

Resolution Ladder::run()
{
    validate(r_);
    if (auto res = upstream()) return std::move(*res);
    if (client_) {
        if (is_vcs(r_.method))
            if (auto res = extid()) return std::move(*res);
        if (r_.method == FetchMethod::git && r_.git_ref->commit) {
            auto subject = "commit " + to_hex(*r_.git_ref->commit);
            if (auto res = revision(*r_.git_ref->commit, Provenance::swh_revision, subject)) return std::move(*res);
        }
        if (r_.method == FetchMethod::git && r_.git_ref->tag)
            if (auto res = tag()) return std::move(*res);
    }
    if (r_.method == FetchMethod::url && db_)
        if (auto res = rebuild()) return std::move(*res);

    std::string summary = std::string(to_string(r_.method)) + " source " + r_.urls[0] + ": " +
                          std::to_string(trail_.size()) + " attempts failed";
    for (const auto& a : trail_) summary += "\n  " + std::string(to_string(a.rung)) + " " + a.subject + ": " + a.message;
    if (combined_svn())
        throw ResolutionFailure(ErrorKind::UnsupportedCombination, summary, std::move(trail_));
    throw ResolutionFailure(ErrorKind::AllPathsFailed, summary, std::move(trail_));
}

} // namespace

Resolution resolve(const SourceRecord& record, ArchiveClient* client, DescriptionDb* db, Fetcher& fetcher,
                   const ResolverOptions& options)
{
    return Ladder(record, client, db, fetcher, options).run();
}

ArchivalCheck check_archival(const SourceRecord& record, ArchiveClient& client, DescriptionDb* db)
{
    validate(record);
    ArchivalCheck out;
    if (record.method == FetchMethod::url) {
        if (auto cnt = client.lookup_content_sha256(*record.file_sha256)) {
            out.status = ArchivalStatus::archived;
            out.swhid = *cnt;
            out.note = "file archived as content";
            return out;
        }
        if (db) {
            try {
                auto desc = description_db_lookup(*record.file_sha256, *db);
                const auto& addresses = std::visit([](const auto& l) { return l.addresses; }, desc.leaf);
                if (!addresses.empty()) {
                    auto known = client.known(addresses);
                    for (const auto& a : addresses)
                        if (known[a]) {
                            out.status = ArchivalStatus::archived;
                            out.swhid = a;
                            out.note = "contents archived; rebuildable from its description";
                            return out;
                        }
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NotFound) throw;
            }
        }
        out.note = "not archived; Save Code Now does not accept file URLs";
        return out;
    }

    if (record.nar_sha256) {
        try {
            out.swhid = client.resolve_extid_nar_sha256(*record.nar_sha256);
            out.status = ArchivalStatus::archived;
            out.note = "nar-sha256 ExtID registered";
            return out;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotFound) throw;
        }
    }
    if (record.method == FetchMethod::git && record.git_ref->commit) {
        Swhid rev{SwhidType::rev, *record.git_ref->commit};
        if (client.known({rev})[rev]) {
            out.status = ArchivalStatus::archived;
            out.swhid = rev;
            out.note = "revision archived";
            return out;
        }
    }
    VisitType type = record.method == FetchMethod::git   ? VisitType::git
                     : record.method == FetchMethod::svn ? VisitType::svn
                                                         : VisitType::hg;
    out.save = client.save_code_now(record.urls[0], type);
    out.status = ArchivalStatus::save_requested;
    out.note = "Save Code Now " + std::string(to_string(out.save->status));
    return out;
}

} // namespace revive
