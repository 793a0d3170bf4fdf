#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mock_archive.hpp"
#include "revive/audit.hpp"
#include "revive/error.hpp"
#include "revive/fetch.hpp"
#include "support.hpp"

using namespace revive;
using namespace revive::audit;
using revive::testing::MockArchive;

namespace {

SourceRecord url_record(const std::string& url, const Bytes& data, std::string package = {})
{
    SourceRecord r;
    r.urls = {url};
    r.file_sha256 = sha256(data);
    r.package = std::move(package);
    return r;
}

SourceRecord git_record(const std::string& url, const NarNode& tree, std::string package = {})
{
    SourceRecord r;
    r.method = FetchMethod::git;
    r.urls = {url};
    r.nar_sha256 = nar_hash(tree);
    r.git_ref = GitRef{std::nullopt, "v1"};
    r.package = std::move(package);
    return r;
}

NarNode small_tree(const std::string& s)
{
    NarNode t = NarNode::directory();
    t.set("file", NarNode::regular(to_bytes(s)));
    return t;
}

Bytes make_targz(const NarNode& top, const std::string& name)
{
    TempDir tmp;
    NarNode root = NarNode::directory();
    root.set(name, top);
    tree_to_disk(root, tmp.path() / "src");
    auto out = tmp.path() / "out.tar.gz";
    revive::testing::run_ok(std::vector<std::string>{
        "sh", "-c", "tar -C " + (tmp.path() / "src").string() + " -cf - " + name + " | gzip -6 > " + out.string()});
    return read_file(out.string());
}

SourceRecord record_of_method(FetchMethod m, const std::string& url)
{
    SourceRecord r;
    r.method = m;
    r.urls = {url};
    return r;
}

} // namespace

TEST(Audit, RotClassification)
{
    Bytes good = to_bytes("release tarball");
    FixtureFetcher f;
    f.add_file("https://a.example/ok.tar.gz", good);
    f.add_failure("https://a.example/gone.tar.gz", ErrorKind::NotFound);
    f.add_file("https://a.example/changed.tar.gz", to_bytes("regenerated tarball"));

    auto ok = classify_rot(url_record("https://a.example/ok.tar.gz", good), f);
    EXPECT_EQ(ok.status, RotStatus::available);
    ASSERT_TRUE(ok.artifact);
    EXPECT_EQ(*ok.artifact->file, good);
    EXPECT_EQ(classify_rot(url_record("https://a.example/gone.tar.gz", good), f).status, RotStatus::missing);
    EXPECT_EQ(classify_rot(url_record("https://a.example/changed.tar.gz", good), f).status, RotStatus::hash_mismatch);

    auto hg = record_of_method(FetchMethod::hg, "https://hg.example/repo");
    EXPECT_EQ(classify_rot(hg, f).status, RotStatus::skipped);
}

TEST(Audit, ScanNeverTalksToTheArchive)
{
    FixtureFetcher f;
    f.add_failure("https://a.example/gone.tar.gz", ErrorKind::NotFound);
    auto recs = scan({url_record("https://a.example/gone.tar.gz", to_bytes("x"))}, f, "snap");
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].rot, RotStatus::missing);
    EXPECT_TRUE(recs[0].swhids.empty());
    EXPECT_EQ(recs[0].coverage, CoverageStatus::undetermined);
    EXPECT_EQ(recs[0].snapshot_label, "snap");
}

TEST(Audit, ComputeSwhidsForTarball)
{
    NarNode top = NarNode::directory();
    top.set("configure", NarNode::regular(to_bytes("#!/bin/sh\n"), true));
    top.set("README", NarNode::regular(to_bytes("read me\n")));
    Bytes tgz = make_targz(top, "pkg-1.0");
    SourceRecord r = url_record("https://a.example/pkg-1.0.tar.gz", tgz);
    auto ids = compute_swhids(r, Artifact{tgz, std::nullopt, r.urls[0]});
    ASSERT_EQ(ids.size(), 1u);

    TempDir tmp;
    tree_to_disk(top, tmp.path() / "pkg");
    EXPECT_EQ(ids[0].to_string(), "swh:1:dir:" + revive::testing::git_tree_hex(tmp.path() / "pkg"));
}

TEST(Audit, ComputeSwhidsForPlainFile)
{
    Bytes patch = to_bytes("--- a/x\n+++ b/x\n@@ -1 +1 @@\n-a\n+b\n");
    SourceRecord r = url_record("https://a.example/fix.patch", patch);
    auto ids = compute_swhids(r, Artifact{patch, std::nullopt, r.urls[0]});
    ASSERT_EQ(ids.size(), 1u);
    EXPECT_EQ(ids[0].to_string(), "swh:1:cnt:" + revive::testing::git_blob_hex(patch));
}

TEST(Audit, ComputeSwhidsUnsupportedCompression)
{
    Bytes lz = to_bytes("LZIP\x01\x0c");
    lz.resize(64, 0);
    SourceRecord r = url_record("https://a.example/pkg.tar.lz", lz);
    EXPECT_TRUE(compute_swhids(r, Artifact{lz, std::nullopt, r.urls[0]}).empty());
}

TEST(Audit, ComputeSwhidsForCheckouts)
{
    auto tree = small_tree("x");
    auto g = git_record("https://git.example/x.git", tree);
    auto ids = compute_swhids(g, Artifact{std::nullopt, tree, g.urls[0]});
    ASSERT_EQ(ids.size(), 1u);
    EXPECT_EQ(ids[0], swhid_for_directory(tree));

    NarNode root = NarNode::directory();
    root.set("a", small_tree("a"));
    root.set("b", small_tree("b"));
    SourceRecord svn = record_of_method(FetchMethod::svn, "svn://svn.example/trunk");
    svn.svn_subdirs = {"a", "b"};
    auto sub = compute_swhids(svn, Artifact{std::nullopt, root, svn.urls[0]});
    EXPECT_EQ(sub, (std::vector<Swhid>{swhid_for_directory(small_tree("a")), swhid_for_directory(small_tree("b"))}));
}

TEST(Audit, Coverage)
{
    auto t1 = small_tree("1"), t2 = small_tree("2"), t3 = small_tree("3");
    std::vector<AuditRecord> recs(4);
    recs[0].swhids = {swhid_for_directory(t1)};
    recs[1].swhids = {swhid_for_directory(t2)};
    recs[2].swhids = {swhid_for_directory(t3)};
    recs[3].swhids = {};

    MockArchive none;
    auto all_missing = recs;
    coverage(all_missing, none.client());
    for (int i = 0; i < 3; ++i) EXPECT_EQ(all_missing[i].coverage, CoverageStatus::missing);
    EXPECT_EQ(all_missing[3].coverage, CoverageStatus::undetermined);

    MockArchive two;
    two.known({swhid_for_directory(t1), swhid_for_directory(t3)});
    auto mixed = recs;
    coverage(mixed, two.client());
    EXPECT_EQ(mixed[0].coverage, CoverageStatus::stored);
    EXPECT_EQ(mixed[1].coverage, CoverageStatus::missing);
    EXPECT_EQ(mixed[2].coverage, CoverageStatus::stored);
    EXPECT_EQ(mixed[3].coverage, CoverageStatus::undetermined);
    auto rep = report(mixed, "s", "2024-01-01");
    EXPECT_EQ(rep.coverage[CoverageStatus::stored], 2u);
    EXPECT_DOUBLE_EQ(rep.coverage_fraction(CoverageStatus::stored), 0.5);

    MockArchive all;
    all.known({swhid_for_directory(t1), swhid_for_directory(t2), swhid_for_directory(t3)});
    auto full = recs;
    coverage(full, all.client());
    for (int i = 0; i < 3; ++i) EXPECT_EQ(full[i].coverage, CoverageStatus::stored);

    AuditRecord partial;
    partial.swhids = {swhid_for_directory(t1), swhid_for_directory(t2)};
    std::vector<AuditRecord> one{partial};
    coverage(one, two.client());
    EXPECT_EQ(one[0].coverage, CoverageStatus::missing);
}

TEST(Audit, CoverageErrorsLeaveRecordsUntouched)
{
    std::vector<AuditRecord> recs(1);
    recs[0].swhids = {swhid_for_directory(small_tree("z"))};
    ScriptedTransport t;
    ManualClock clock;
    ArchiveEndpoint ep;
    ep.base_url = revive::testing::kArchive;
    ArchiveClient client(ep, t, clock);
    t.on("POST", ep.base_url + "/api/1/known/", json_response(401, R"({"error":"denied"})"));
    EXPECT_THROW(coverage(recs, client), Error);
    EXPECT_EQ(recs[0].coverage, CoverageStatus::undetermined);
}

TEST(Audit, DownloadBuckets)
{
    EXPECT_EQ(classify_download("https://x/a-1.tar.gz"), DownloadType::tar_gz);
    EXPECT_EQ(classify_download("https://x/a-1.tgz"), DownloadType::tar_gz);
    EXPECT_EQ(classify_download("https://x/a-1.tar.xz"), DownloadType::tar_xz);
    EXPECT_EQ(classify_download("https://x/a-1.tar.bz2"), DownloadType::tar_bz2);
    EXPECT_EQ(classify_download("https://x/a-1.tar"), DownloadType::tar);
    EXPECT_EQ(classify_download("https://x/a-1.zip?raw=1"), DownloadType::zip);
    EXPECT_EQ(classify_download("https://x/fix.patch"), DownloadType::text);
    EXPECT_EQ(classify_download("https://x/a-1.tar.lz"), DownloadType::other);
}

TEST(Audit, Census)
{
    std::vector<SourceRecord> gits;
    for (int i = 0; i < 4; ++i) gits.push_back(record_of_method(FetchMethod::git, "https://g/" + std::to_string(i)));
    std::vector<AuditRecord> recs;
    for (auto& g : gits) recs.push_back(AuditRecord{g, "s", RotStatus::skipped, {}, CoverageStatus::undetermined});
    auto rep = report(recs, "s", "2024-01-01");
    EXPECT_EQ(rep.types.high[0], 4u);
    auto csv = census_csv({rep});
    EXPECT_NE(csv.find("\n2024-01-01,1,0,1,0,0,"), std::string::npos) << csv;

    recs.pop_back();
    recs.push_back(AuditRecord{record_of_method(FetchMethod::url, "https://f/x.tar.bz2"), "s", RotStatus::skipped, {},
                               CoverageStatus::undetermined});
    auto c = census([&] {
        std::vector<SourceRecord> v;
        for (auto& r : recs) v.push_back(r.source);
        return v;
    }());
    EXPECT_EQ(c.high[0], 3u);
    EXPECT_EQ(c.high[1], 1u);
    EXPECT_EQ(c.download[static_cast<int>(DownloadType::tar_bz2)], 1u);
    auto csv2 = census_csv({report(recs, "s", "2024-01-01")});
    EXPECT_NE(csv2.find("\n2024-01-01,0.75,0.25,1,0,0,0,0,1,"), std::string::npos) << csv2;

    std::mt19937_64 rng(7);
    auto shuffled = recs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(census_csv({report(shuffled, "s", "2024-01-01")}), csv2);
}

TEST(Audit, RotCsvSumsToTotal)
{
    std::vector<AuditRecord> recs(5);
    recs[0].rot = RotStatus::available;
    recs[1].rot = RotStatus::available;
    recs[2].rot = RotStatus::missing;
    recs[3].rot = RotStatus::hash_mismatch;
    auto rep = report(recs, "label,with comma", "");
    double sum = 0;
    for (auto s : {RotStatus::available, RotStatus::missing, RotStatus::hash_mismatch, RotStatus::skipped})
        sum += rep.rot_fraction(s);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    auto csv = rot_csv({rep});
    EXPECT_EQ(csv.substr(csv.find('\n') + 1), "\"label,with comma\",0.4,0.2,0.2,0.2,2,1,1,1,5,\"label,with comma\"\n");
}

TEST(Audit, ImpactRank)
{
    auto rec = [](std::string p) {
        SourceRecord r;
        r.urls = {"https://x/" + p};
        r.package = std::move(p);
        return r;
    };
    std::vector<SourceRecord> recs{rec("lib"), rec("mid"), rec("app"), rec("alone"), rec("")};
    EXPECT_EQ(impact_rank(recs, {{"mid", "lib"}, {"app", "mid"}}), (std::vector<std::size_t>{3, 2, 1, 1, 1}));

    std::vector<SourceRecord> diamond{rec("d"), rec("b"), rec("c"), rec("a")};
    EXPECT_EQ(impact_rank(diamond, {{"b", "d"}, {"c", "d"}, {"a", "b"}, {"a", "c"}}),
              (std::vector<std::size_t>{4, 2, 2, 1}));

    try {
        impact_rank(recs, {{"a", "b"}, {"b", "c"}, {"c", "a"}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CycleDetected);
    }
}

TEST(Audit, EdgesCsv)
{
    auto e = read_edges_csv("dependent,dependency\napp,lib\nlib,libc\n");
    EXPECT_EQ(e, (std::vector<std::pair<std::string, std::string>>{{"app", "lib"}, {"lib", "libc"}}));
}
