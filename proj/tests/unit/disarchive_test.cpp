#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "revive/disarchive.hpp"
#include "revive/error.hpp"
#include "revive/fetch.hpp"
#include "revive/heritage.hpp"
#include "support.hpp"

using namespace revive;
using revive::testing::git_tree_hex;
using revive::testing::kArchive;
using revive::testing::run_ok;
using revive::testing::source_dir;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    TempDir tmp;
    fs::path src() const { return tmp.path() / "src"; }

    Fixture()
    {
        auto root = src() / "hello-2.12";
        fs::create_directories(root / "lib");
        fs::create_directories(root / "doc");
        std::ofstream(root / "README") << "Hello\n";
        std::ofstream(root / "lib" / "x.c") << std::string(30000, 'c') << "\n";
        std::ofstream(root / "configure") << "#!/bin/sh\nexit 0\n";
        fs::permissions(root / "configure", fs::perms::owner_exec, fs::perm_options::add);
        fs::create_symlink("README", root / "README.md");
    }

    /// Tarball made by the system tools: `tar | compressor`.
    Bytes make(const std::vector<std::string>& compressor = {})
    {
        auto tar_path = tmp.path() / "out.tar";
        run_ok({"tar", "--sort=name", "-cf", tar_path.string(), "-C", src().string(), "hello-2.12"});
        auto data = read_file(tar_path.string());
        if (compressor.empty()) return data;
        return to_bytes(run_ok(compressor, to_string(data)));
    }
};

ErrorKind kind_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::PreconditionViolation;
}

} // namespace

TEST(Disarchive, GzipTarballRoundTrip)
{
    Fixture fx;
    auto gz = fx.make({"gzip", "-9", "-n", "--rsyncable", "-c"});
    auto d = disassemble(gz, "hello-2.12.tar.gz");
    ASSERT_TRUE(d.description.compression);
    EXPECT_EQ(d.description.compression->members[0].compressor, "gnu-best-rsync");
    EXPECT_EQ(d.description.compression->members[0].header.extra_flags, 2);
    ASSERT_TRUE(d.description.tarball);
    EXPECT_EQ(d.description.tarball->name, "hello-2.12.tar");
    const auto& ref = std::get<DirectoryRef>(d.description.leaf);
    EXPECT_EQ(ref.name, "hello-2.12");
    ASSERT_EQ(ref.addresses.size(), 1u);
    EXPECT_EQ(to_hex(ref.addresses[0].digest), git_tree_hex(fx.src() / "hello-2.12"));
    EXPECT_EQ(ref.digest, nar_hash(tree_from_disk(fx.src() / "hello-2.12")));

    MemoryContentProvider mem;
    mem.add(d.description.leaf, d.content);
    EXPECT_EQ(assemble(d.description, mem), gz);

    auto reread = read_description(write_description(d.description));
    EXPECT_EQ(assemble(reread, mem), gz);
}

TEST(Disarchive, PlainTarHasNoCompressionLayer)
{
    Fixture fx;
    auto tar = fx.make();
    auto d = disassemble(tar, "hello-2.12.tar");
    EXPECT_FALSE(d.description.compression);
    ASSERT_TRUE(d.description.tarball);
    EXPECT_EQ(d.description.tarball->name, "hello-2.12.tar");
    MemoryContentProvider mem;
    mem.add(d.description.leaf, d.content);
    EXPECT_EQ(assemble(d.description, mem), tar);
}

TEST(Disarchive, Bzip2AndXzRoundTrip)
{
    Fixture fx;
    for (auto [name, tool] : std::vector<std::pair<std::string, std::vector<std::string>>>{
             {"h.tar.bz2", {"bzip2", "-9", "-c"}},
             {"h.tar.bz2", {"bzip2", "-1", "-c"}},
             {"h.tar.xz", {"xz", "-6", "-c"}},
             {"h.tar.xz", {"xz", "-2e", "--check=sha256", "-c"}},
             {"h.tgz", {"gzip", "-5", "-c"}}}) {
        auto file = fx.make(tool);
        auto d = disassemble(file, name);
        ASSERT_TRUE(d.description.tarball) << name;
        EXPECT_EQ(d.description.tarball->name, name == "h.tgz" ? "h.tar" : "h.tar");
        MemoryContentProvider mem;
        mem.add(d.description.leaf, d.content);
        EXPECT_EQ(assemble(d.description, mem), file) << tool[1];
    }
}

TEST(Disarchive, LocalContentDirectory)
{
    Fixture fx;
    auto gz = fx.make({"gzip", "-9", "-n", "-c"});
    auto d = disassemble(gz, "h.tar.gz");
    auto out = fx.tmp.path() / "content";
    write_content(d, out);
    LocalContentProvider local(out);
    EXPECT_EQ(assemble(d.description, local), gz);
}

TEST(Disarchive, AlteredContentIsRejected)
{
    Fixture fx;
    auto gz = fx.make({"gzip", "-6", "-n", "-c"});
    auto d = disassemble(gz, "h.tar.gz");
    NarNode altered = d.content;
    altered.set("README", NarNode::regular(to_bytes("Hullo\n")));
    MemoryContentProvider mem;
    mem.add(d.description.leaf, altered);
    EXPECT_EQ(kind_of([&] { assemble(d.description, mem); }), ErrorKind::ContentDigestMismatch);

    struct Liar : ContentProvider {
        NarNode tree;
        NarNode fetch(const ContentLeaf&) override { return tree; }
    } liar;
    liar.tree = altered;
    EXPECT_EQ(kind_of([&] { assemble(d.description, liar); }), ErrorKind::ContentDigestMismatch);
}

TEST(Disarchive, BareFilesBecomeContentRefs)
{
    auto patch = to_bytes("--- a\n+++ b\n@@ -1 +1 @@\n-x\n+y\n");
    auto d = disassemble(patch, "fix.patch");
    EXPECT_FALSE(d.description.compression);
    EXPECT_FALSE(d.description.tarball);
    const auto& c = std::get<ContentRef>(d.description.leaf);
    EXPECT_EQ(c.addresses.at(0), swhid_for_content(patch));
    MemoryContentProvider mem;
    mem.add(d.description.leaf, d.content);
    EXPECT_EQ(assemble(d.description, mem), patch);

    auto gz = to_bytes(run_ok({"gzip", "-9", "-n", "-c"}, to_string(patch)));
    auto dg = disassemble(gz, "fix.patch.gz");
    EXPECT_TRUE(std::holds_alternative<ContentRef>(dg.description.leaf));
    EXPECT_EQ(std::get<ContentRef>(dg.description.leaf).name, "fix.patch");
    MemoryContentProvider mem2;
    mem2.add(dg.description.leaf, dg.content);
    EXPECT_EQ(assemble(dg.description, mem2), gz);
}

TEST(Disarchive, UnsupportedInputs)
{
    Bytes lzip = to_bytes("LZIP\x01\x0c");
    lzip.resize(64, 0);
    try {
        disassemble(lzip, "sed-4.8.tar.lz");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownFormat);
        EXPECT_EQ(e.layer(), 0u);
    }
    auto inner = to_bytes(run_ok({"gzip", "-n", "-c"}, "data"));
    auto twice = to_bytes(run_ok({"gzip", "-n", "-c"}, to_string(inner)));
    try {
        disassemble(twice, "x.gz.gz");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownFormat);
        EXPECT_EQ(e.layer(), 1u);
    }
}

TEST(Disarchive, InnerNames)
{
    using compress::Format;
    EXPECT_EQ(inner_name("sed-4.8.tar.gz", Format::gzip), "sed-4.8.tar");
    EXPECT_EQ(inner_name("a.tgz", Format::gzip), "a.tar");
    EXPECT_EQ(inner_name("a.tar.bz2", Format::bzip2), "a.tar");
    EXPECT_EQ(inner_name("a.txz", Format::xz), "a.tar");
}

TEST(Disarchive, ArchiveWithoutSingleRoot)
{
    TempDir tmp;
    fs::create_directories(tmp.path() / "s");
    std::ofstream(tmp.path() / "s" / "a") << "1";
    std::ofstream(tmp.path() / "s" / "b") << "2";
    auto tar = tmp.path() / "flat.tar";
    run_ok({"tar", "-cf", tar.string(), "-C", (tmp.path() / "s").string(), "a", "b"});
    auto data = read_file(tar.string());
    auto d = disassemble(data, "flat.tar");
    const auto& ref = std::get<DirectoryRef>(d.description.leaf);
    EXPECT_EQ(ref.name, "");
    EXPECT_EQ(to_hex(ref.addresses[0].digest), git_tree_hex(tmp.path() / "s"));
    auto out = tmp.path() / "content";
    write_content(d, out);
    LocalContentProvider local(out);
    EXPECT_EQ(assemble(d.description, local), data);
}

TEST(Disarchive, LocalDatabase)
{
    Fixture fx;
    auto gz = fx.make({"gzip", "-9", "-n", "-c"});
    auto d = disassemble(gz, "h.tar.gz");
    LocalDescriptionDb db(fx.tmp.path() / "db");
    db.store(d.description);
    EXPECT_TRUE(fs::exists(db.path_for(sha256(gz))));
    EXPECT_EQ(description_db_lookup(sha256(gz), db), d.description);
    EXPECT_EQ(kind_of([&] { db.lookup(sha256(std::string_view("other"))); }), ErrorKind::NotFound);

    // An entry filed under the wrong digest.
    auto other = sha256(std::string_view("other"));
    fs::create_directories(db.path_for(other).parent_path());
    fs::copy_file(db.path_for(sha256(gz)), db.path_for(other));
    EXPECT_EQ(kind_of([&] { description_db_lookup(other, db); }), ErrorKind::MalformedDescription);
}

TEST(Disarchive, RemoteDatabase)
{
    auto text = to_string(read_file((source_dir() / "tests/fixtures/sed-4.8.sexp").string()));
    auto golden = read_description(text);
    ScriptedTransport t;
    HttpResponse ok;
    ok.status = 200;
    ok.body = text;
    t.on("GET", "https://db.example/sha256/" + to_hex(golden.digest()), ok);
    t.on("GET", "https://db.example/sha256/*", HttpResponse{404, {}, "not found"});
    RemoteDescriptionDb db("https://db.example", t);
    auto got = description_db_lookup(golden.digest(), db);
    EXPECT_EQ(got, golden);
    EXPECT_EQ(std::get<DirectoryRef>(got.leaf).name, "sed-4.8");
    EXPECT_EQ(got.compression->members.at(0).compressor, "gnu-best-rsync");
    EXPECT_EQ(kind_of([&] { db.lookup(sha256(std::string_view("x"))); }), ErrorKind::NotFound);
}

TEST(Disarchive, VaultBackedAssembly)
{
    Fixture fx;
    auto gz = fx.make({"gzip", "-9", "-n", "-c"});
    auto d = disassemble(gz, "h.tar.gz");
    const auto& ref = std::get<DirectoryRef>(d.description.leaf);
    ScriptedTransport t;
    revive::testing::serve_vault(t, ref.addresses[0], revive::testing::vault_bundle(d.content, "swh-dir"));
    ManualClock clock;
    ArchiveEndpoint ep;
    ep.base_url = kArchive;
    ArchiveClient client(ep, t, clock);
    VaultContentProvider vault(client, std::chrono::seconds(5), std::chrono::minutes(10));
    EXPECT_EQ(assemble(d.description, vault), gz);
}
