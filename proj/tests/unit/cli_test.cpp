#include <gtest/gtest.h>

#include <fstream>

#include "mock_archive.hpp"
#include "revive/fetch.hpp"
#include "revive/source.hpp"
#include "support.hpp"

using namespace revive;
using revive::testing::run;
using revive::testing::run_ok;
namespace fs = std::filesystem;

namespace {

const std::string kCli = REVIVE_CLI_PATH;

void write_text(const fs::path& p, const std::string& s)
{
    fs::create_directories(p.parent_path());
    std::ofstream(p) << s;
}

NarNode project()
{
    NarNode t = NarNode::directory();
    t.set("README", NarNode::regular(to_bytes("hello\n")));
    NarNode src = NarNode::directory();
    src.set("hello.c", NarNode::regular(to_bytes("int main(void){return 0;}\n")));
    src.set("run", NarNode::regular(to_bytes("#!/bin/sh\n"), true));
    t.set("src", src);
    return t;
}

std::string tarball_manifest(const std::string& url, const Bytes& data)
{
    SourceRecord r;
    r.urls = {url};
    r.file_sha256 = sha256(data);
    return emit_sources_manifest({r});
}

std::string content_route(const std::string& base, const Bytes& data)
{
    auto id = swhid_for_content(data);
    return R"({"routes":[{"url":")" + base + "/api/1/content/sha256:" + to_hex(sha256(data)) +
           R"(/","json":{"checksums":{"sha1_git":")" + to_hex(id.digest) + R"("}}}]})";
}

} // namespace

TEST(Cli, NarHashMatchesOracle)
{
    TempDir tmp;
    tree_to_disk(project(), tmp.path() / "p");
    auto r = run({kCli, "nar-hash", (tmp.path() / "p").string()});
    ASSERT_EQ(r.status, 0) << r.err;
    auto oracle = revive::testing::nar_oracle(tmp.path() / "p");
    EXPECT_EQ(r.out, oracle.base32 + " " + oracle.hex + "\n");
}

TEST(Cli, SwhidMatchesGit)
{
    TempDir tmp;
    tree_to_disk(project(), tmp.path() / "p");
    auto out = run_ok({kCli, "swhid", (tmp.path() / "p").string()});
    EXPECT_EQ(out, "swh:1:dir:" + revive::testing::git_tree_hex(tmp.path() / "p") + "\n");
}

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(run({kCli, "frobnicate"}).status, 2);
    EXPECT_EQ(run({kCli}).status, 2);
    TempDir tmp;
    write_text(tmp.path() / "d.sexp", "()");
    EXPECT_EQ(run({kCli, "assemble", (tmp.path() / "d.sexp").string()}).status, 2);
}

TEST(Cli, DisassembleAssembleRoundTrip)
{
    TempDir tmp;
    NarNode root = NarNode::directory();
    root.set("hello-1.0", project());
    tree_to_disk(root, tmp.path() / "src");
    auto tgz = tmp.path() / "hello-1.0.tar.gz";
    run_ok({"sh", "-c", "tar -C " + (tmp.path() / "src").string() + " -cf - hello-1.0 | gzip -9n > " + tgz.string()});
    auto desc = tmp.path() / "hello.sexp";
    auto content = tmp.path() / "content";
    run_ok({kCli, "disassemble", tgz.string(), "-o", desc.string(), "--content-out", content.string()});
    auto rebuilt = tmp.path() / "rebuilt.tar.gz";
    run_ok({kCli, "assemble", desc.string(), "--content-dir", content.string(), "-o", rebuilt.string()});
    EXPECT_EQ(read_file(rebuilt.string()), read_file(tgz.string()));

    fs::path readme;
    for (const auto& e : fs::recursive_directory_iterator(content))
        if (e.path().filename() == "README") readme = e.path();
    ASSERT_FALSE(readme.empty());
    write_text(readme, "altered\n");
    auto bad = run({kCli, "assemble", desc.string(), "--content-dir", content.string(), "-o", rebuilt.string()});
    EXPECT_EQ(bad.status, 1);
    EXPECT_NE(bad.err.find("ContentDigestMismatch"), std::string::npos) << bad.err;
}

TEST(Cli, ResolveFromArchiveWithOfflineMocks)
{
    TempDir tmp;
    auto mocks = tmp.path() / "mocks";
    auto tree = project();
    auto dir = swhid_for_directory(tree);
    fs::create_directories(mocks);
    write_file((mocks / "bundle.tar.gz").string(), revive::testing::quick_bundle(tree));
    write_text(mocks / "fetch.json", R"({"files":{"https://git.example/p.git":{"status":404}}})");
    std::string vault = "/api/1/vault/flat/" + dir.to_string() + "/";
    write_text(mocks / "swh.json",
               R"({"routes":[)"
               R"({"url":"/api/1/extid/nar-sha256/hex:)" + nar_hash(tree).hex() + R"(/","json":{"target":")" +
                   dir.to_string() + R"("}},)"
                   R"({"url":")" + vault + R"(","json":{"status":"done","fetch_url":"https://archive.softwareheritage.org)" +
                   vault + R"(raw/"}},)"
                   R"({"url":")" + vault + R"(raw/","body_file":"bundle.tar.gz"}]})");
    SourceRecord r;
    r.method = FetchMethod::git;
    r.urls = {"https://git.example/p.git"};
    r.nar_sha256 = nar_hash(tree);
    r.git_ref = GitRef{digest_from_hex<20>("309cf2674ee7a0749978cf8265ab91a60aea0f7d"), std::nullopt};
    write_text(tmp.path() / "m.json", emit_sources_manifest({r}));

    auto out = tmp.path() / "checkout";
    auto res = run({kCli, "--offline-mocks", mocks.string(), "resolve", "--manifest", (tmp.path() / "m.json").string(),
                    "--source", "0", "-o", out.string()});
    ASSERT_EQ(res.status, 0) << res.err;
    EXPECT_EQ(res.out, "swh-extid\t" + out.string() + "\n");
    EXPECT_NE(res.err.find("note: upstream"), std::string::npos);
    EXPECT_EQ(tree_from_disk(out), tree);
}

TEST(Cli, ConfigPrecedence)
{
    TempDir tmp;
    Bytes data = to_bytes("some tarball");
    auto mocks = tmp.path() / "mocks";
    write_text(mocks / "swh.json", content_route("https://winner.example", data));
    write_text(tmp.path() / "m.json", tarball_manifest("https://ftp.example/x.tar.gz", data));
    auto config = [&](const std::string& url) {
        auto p = tmp.path() / ("cfg-" + std::to_string(std::hash<std::string>{}(url)) + ".json");
        write_text(p, R"({"swh_url":")" + url + R"("})");
        return p.string();
    };
    auto lint = [&](std::vector<std::string> pre, std::vector<std::string> flags) {
        std::vector<std::string> argv = {"env", "-u", "REVIVE_SWH_URL", "XDG_CONFIG_HOME=" + (tmp.path() / "none").string()};
        argv.insert(argv.end(), pre.begin(), pre.end());
        argv.push_back(kCli);
        argv.insert(argv.end(), flags.begin(), flags.end());
        for (const auto& a : std::vector<std::string>{"--offline-mocks", mocks.string(), "lint-archival", "--manifest",
                                                     (tmp.path() / "m.json").string()})
            argv.push_back(a);
        auto r = run(argv);
        EXPECT_EQ(r.status, 0) << r.err;
        return r.out.find("\tarchived\t") != std::string::npos;
    };
    std::string win = "https://winner.example", lose = "https://loser.example";
    EXPECT_TRUE(lint({}, {"--config", config(win)}));
    EXPECT_FALSE(lint({}, {"--config", config(lose)}));
    EXPECT_TRUE(lint({"REVIVE_SWH_URL=" + win}, {"--config", config(lose)}));
    EXPECT_FALSE(lint({"REVIVE_SWH_URL=" + lose}, {"--config", config(win)}));
    EXPECT_TRUE(lint({"REVIVE_SWH_URL=" + lose}, {"--config", config(lose), "--swh-url", win}));

    write_text(tmp.path() / "xdg" / "revive" / "config.json", R"({"swh_url":")" + win + R"("})");
    auto argv = std::vector<std::string>{"env", "-u", "REVIVE_SWH_URL", "XDG_CONFIG_HOME=" + (tmp.path() / "xdg").string(),
                                         kCli, "--offline-mocks", mocks.string(), "lint-archival", "--manifest",
                                         (tmp.path() / "m.json").string()};
    EXPECT_NE(run(argv).out.find("\tarchived\t"), std::string::npos);
}

TEST(Cli, OfflineRefusesNetwork)
{
    TempDir tmp;
    Bytes data = to_bytes("x");
    write_text(tmp.path() / "m.json", tarball_manifest("https://ftp.example/x.tar.gz", data));
    auto r = run({kCli, "--offline", "lint-archival", "--manifest", (tmp.path() / "m.json").string()});
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, AuditImpactCsv)
{
    TempDir tmp;
    std::vector<SourceRecord> recs;
    for (const char* p : {"lib", "app", "tool"}) {
        SourceRecord r;
        r.urls = {std::string("https://x.example/") + p + ".tar.gz"};
        r.file_sha256 = sha256(std::string_view(p));
        r.package = p;
        recs.push_back(r);
    }
    write_text(tmp.path() / "m.json", emit_sources_manifest(recs));
    write_text(tmp.path() / "e.csv", "dependent,dependency\napp,lib\ntool,app\n");
    auto out = run_ok({kCli, "--offline", "audit", "impact", "--manifest", (tmp.path() / "m.json").string(), "--edges",
                       (tmp.path() / "e.csv").string()});
    EXPECT_NE(out.find("https://x.example/lib.tar.gz,lib,3\n"), std::string::npos) << out;
    EXPECT_NE(out.find("https://x.example/tool.tar.gz,tool,1\n"), std::string::npos) << out;
}

TEST(Cli, EmitManifestIsCanonical)
{
    TempDir tmp;
    auto golden = revive::testing::source_dir() / "tests" / "fixtures" / "manifest_git.json";
    auto out = run_ok({kCli, "emit-manifest", "--manifest", golden.string(), "--manifest", golden.string()});
    auto expected = to_string(read_file(golden.string()));
    while (!expected.empty() && expected.back() == '\n') expected.pop_back();
    while (!out.empty() && out.back() == '\n') out.pop_back();
    EXPECT_EQ(out, expected);
}
