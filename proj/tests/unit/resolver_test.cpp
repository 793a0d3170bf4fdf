#include <gtest/gtest.h>

#include "mock_archive.hpp"
#include "revive/disarchive.hpp"
#include "revive/error.hpp"
#include "revive/fetch.hpp"
#include "revive/resolver.hpp"
#include "support.hpp"

using namespace revive;
using revive::testing::MockArchive;
using revive::testing::run_ok;

namespace {

NarNode sample_tree(const std::string& salt)
{
    NarNode t = NarNode::directory();
    t.set("README", NarNode::regular(to_bytes("project " + salt + "\n")));
    NarNode src = NarNode::directory();
    src.set("main.c", NarNode::regular(to_bytes("int main(void) { return 0; }\n")));
    src.set("build.sh", NarNode::regular(to_bytes("#!/bin/sh\n"), true));
    t.set("src", src);
    return t;
}

NarNode tampered(NarNode t)
{
    t.set("README", NarNode::regular(to_bytes("tampered\n")));
    return t;
}

const std::string kRepo = "https://git.example.org/project.git";
const Sha1Digest kCommit = digest_from_hex<20>("309cf2674ee7a0749978cf8265ab91a60aea0f7d");

SourceRecord git_commit_record(const NarNode& tree)
{
    SourceRecord r;
    r.method = FetchMethod::git;
    r.urls = {kRepo};
    r.nar_sha256 = nar_hash(tree);
    r.git_ref = GitRef{kCommit, std::nullopt};
    return r;
}

SourceRecord git_tag_record(const NarNode& tree)
{
    auto r = git_commit_record(tree);
    r.git_ref = GitRef{std::nullopt, "1.3.2"};
    return r;
}

ResolverOptions fast()
{
    ResolverOptions o;
    o.poll_interval = std::chrono::seconds(1);
    o.vault_deadline = std::chrono::seconds(30);
    return o;
}

std::vector<Provenance> rungs(const std::vector<Attempt>& trail)
{
    std::vector<Provenance> v;
    for (const auto& a : trail) v.push_back(a.rung);
    return v;
}

} // namespace

TEST(Resolver, HealthyUpstreamNeedsNoArchive)
{
    auto tree = sample_tree("a");
    FixtureFetcher f;
    f.add_git(kRepo, to_hex(kCommit), tree);
    MockArchive swh;
    auto res = resolve(git_commit_record(tree), &swh.client(), nullptr, f, fast());
    EXPECT_EQ(res.provenance, Provenance::upstream);
    EXPECT_TRUE(res.verified);
    EXPECT_EQ(*res.tree, tree);
    EXPECT_TRUE(res.trail.empty());
    EXPECT_EQ(swh.calls(), 0u);
}

TEST(Resolver, MirrorsAreTriedInOrder)
{
    Bytes file = to_bytes("tarball bytes");
    SourceRecord r;
    r.urls = {"https://dead.example/x.tar.gz", "https://bad.example/x.tar.gz", "https://good.example/x.tar.gz"};
    r.file_sha256 = sha256(file);
    FixtureFetcher f;
    f.add_failure(r.urls[0], ErrorKind::NotFound);
    f.add_file(r.urls[1], to_bytes("tarball bytez"));
    f.add_file(r.urls[2], file);
    auto res = resolve(r, nullptr, nullptr, f);
    EXPECT_EQ(res.provenance, Provenance::upstream);
    EXPECT_EQ(*res.file, file);
    ASSERT_EQ(res.trail.size(), 2u);
    EXPECT_EQ(res.trail[0].kind, ErrorKind::NotFound);
    EXPECT_EQ(res.trail[1].kind, ErrorKind::HashMismatch);
}

TEST(Resolver, ExtidRung)
{
    auto tree = sample_tree("b");
    FixtureFetcher f;
    f.add_failure(kRepo, ErrorKind::NotFound);
    MockArchive swh;
    auto dir = swhid_for_directory(tree);
    swh.extid(nar_hash(tree), dir);
    swh.vault(dir, tree);
    auto res = resolve(git_commit_record(tree), &swh.client(), nullptr, f, fast());
    EXPECT_EQ(res.provenance, Provenance::swh_extid);
    EXPECT_EQ(*res.tree, tree);
    EXPECT_EQ(rungs(res.trail), std::vector<Provenance>{Provenance::upstream});
}

TEST(Resolver, RevisionRung)
{
    auto tree = sample_tree("c");
    FixtureFetcher f;
    f.add_failure(kRepo, ErrorKind::TransportError);
    MockArchive swh;
    auto dir = swhid_for_directory(tree);
    swh.revision(kCommit, dir);
    swh.vault(dir, tree, 2);
    auto res = resolve(git_commit_record(tree), &swh.client(), nullptr, f, fast());
    EXPECT_EQ(res.provenance, Provenance::swh_revision);
    EXPECT_EQ(*res.tree, tree);
    EXPECT_EQ(rungs(res.trail), (std::vector<Provenance>{Provenance::upstream, Provenance::swh_extid}));
}

TEST(Resolver, TamperedUpstreamAdvancesToTag)
{
    auto tree = sample_tree("d");
    FixtureFetcher f;
    f.add_git(kRepo, "1.3.2", tampered(tree));
    MockArchive swh;
    Sha1Digest commit = kCommit;
    commit[0] ^= 1;
    auto dir = swhid_for_directory(tree);
    swh.tag(kRepo, "1.3.2", commit, true);
    swh.revision(commit, dir);
    swh.vault(dir, tree);
    auto res = resolve(git_tag_record(tree), &swh.client(), nullptr, f, fast());
    EXPECT_EQ(res.provenance, Provenance::swh_tag);
    EXPECT_TRUE(res.verified);
    EXPECT_EQ(*res.tree, tree);
    ASSERT_FALSE(res.trail.empty());
    EXPECT_EQ(res.trail[0].rung, Provenance::upstream);
    EXPECT_EQ(res.trail[0].kind, ErrorKind::HashMismatch);
}

TEST(Resolver, DisarchiveRebuildRung)
{
    TempDir tmp;
    NarNode tree = NarNode::directory();
    tree.set("hello-2.12", sample_tree("e"));
    tree_to_disk(tree, tmp.path() / "src");
    auto tar = tmp.path() / "hello-2.12.tar.gz";
    run_ok(std::vector<std::string>{"sh", "-c", "tar -C " + (tmp.path() / "src").string() + " -cf - hello-2.12 | gzip -9n > " + tar.string()});
    auto file = read_file(tar.string());
    auto d = disassemble(file, "hello-2.12.tar.gz");
    LocalDescriptionDb db(tmp.path() / "db");
    db.store(d.description);

    SourceRecord r;
    r.urls = {"https://ftp.example.org/hello-2.12.tar.gz"};
    r.file_sha256 = sha256(file);
    FixtureFetcher f;
    f.add_failure(r.urls[0], ErrorKind::NotFound);
    MockArchive swh;
    const auto& ref = std::get<DirectoryRef>(d.description.leaf);
    swh.vault(ref.addresses[0], d.content);
    auto res = resolve(r, &swh.client(), &db, f, fast());
    EXPECT_EQ(res.provenance, Provenance::disarchive_rebuild);
    EXPECT_EQ(*res.file, file);
}

TEST(Resolver, EverythingFails)
{
    auto tree = sample_tree("f");
    FixtureFetcher f;
    f.add_git(kRepo, to_hex(kCommit), tampered(tree));
    MockArchive swh;
    auto dir = swhid_for_directory(tree);
    swh.extid(nar_hash(tree), dir);
    swh.revision(kCommit, dir);
    swh.vault(dir, tampered(tree));
    try {
        resolve(git_commit_record(tree), &swh.client(), nullptr, f, fast());
        FAIL();
    } catch (const ResolutionFailure& e) {
        EXPECT_EQ(e.kind(), ErrorKind::AllPathsFailed);
        EXPECT_EQ(rungs(e.trail()),
                  (std::vector<Provenance>{Provenance::upstream, Provenance::swh_extid, Provenance::swh_revision}));
        for (const auto& a : e.trail()) EXPECT_EQ(a.kind, ErrorKind::HashMismatch);
    }
}

TEST(Resolver, SvnSubdirectories)
{
    NarNode doc = NarNode::directory(), tex = NarNode::directory();
    doc.set("manual.txt", NarNode::regular(to_bytes("doc\n")));
    tex.set("plain.tex", NarNode::regular(to_bytes("\\bye\n")));
    SourceRecord r;
    r.method = FetchMethod::svn;
    r.urls = {"svn://svn.example/texlive/trunk"};
    r.svn_revision = 66594;
    r.svn_subdirs = {"doc", "tex/generic"};
    r.svn_subdir_digests = {nar_hash(doc), nar_hash(tex)};

    FixtureFetcher up;
    up.add_svn("svn://svn.example/texlive/trunk/doc", 66594, doc);
    up.add_svn("svn://svn.example/texlive/trunk/tex/generic", 66594, tex);
    auto res = resolve(r, nullptr, nullptr, up);
    EXPECT_EQ(res.provenance, Provenance::upstream);
    EXPECT_EQ(*res.tree->lookup("tex/generic"), tex);

    FixtureFetcher down;
    down.add_failure("svn://svn.example/texlive/trunk/doc", ErrorKind::NotFound);
    MockArchive swh;
    swh.extid(nar_hash(doc), swhid_for_directory(doc));
    swh.extid(nar_hash(tex), swhid_for_directory(tex));
    swh.vault(swhid_for_directory(doc), doc);
    swh.vault(swhid_for_directory(tex), tex);
    auto archived = resolve(r, &swh.client(), nullptr, down, fast());
    EXPECT_EQ(archived.provenance, Provenance::swh_extid);
    EXPECT_EQ(*archived.tree->lookup("doc"), doc);

    auto combined = r;
    combined.svn_subdir_digests.clear();
    combined.nar_sha256 = nar_hash(NarNode::directory());
    try {
        resolve(combined, &swh.client(), nullptr, down, fast());
        FAIL();
    } catch (const ResolutionFailure& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedCombination);
    }
}

TEST(Resolver, ArchivalChecks)
{
    auto tree = sample_tree("g");
    MockArchive swh;
    auto archived = git_commit_record(tree);
    swh.extid(nar_hash(tree), swhid_for_directory(tree));
    auto c1 = check_archival(archived, swh.client());
    EXPECT_EQ(c1.status, ArchivalStatus::archived);
    EXPECT_FALSE(c1.save);
    EXPECT_EQ(swh.transport().count("POST", revive::testing::kArchive + "/api/1/origin/save/"), 0u);

    auto fresh = git_commit_record(sample_tree("h"));
    fresh.urls = {"https://git.example.org/new.git"};
    swh.transport().on("POST", revive::testing::kArchive + "/api/1/origin/save/git/url/https://git.example.org/new.git/",
                       json_response(200, R"({"save_request_status":"accepted","save_task_status":"pending"})"));
    auto c2 = check_archival(fresh, swh.client());
    EXPECT_EQ(c2.status, ArchivalStatus::save_requested);
    ASSERT_TRUE(c2.save);
    EXPECT_EQ(c2.save->status, SaveStatus::accepted);

    SourceRecord tarball;
    tarball.urls = {"https://ftp.gnu.org/gnu/sed/sed-4.8.tar.gz"};
    tarball.file_sha256 = sha256(std::string_view("never archived"));
    auto before = swh.transport().count("POST", revive::testing::kArchive + "/api/1/origin/save/");
    auto c3 = check_archival(tarball, swh.client());
    EXPECT_EQ(c3.status, ArchivalStatus::not_archived);
    EXPECT_FALSE(c3.save);
    EXPECT_EQ(swh.transport().count("POST", revive::testing::kArchive + "/api/1/origin/save/"), before);
}
