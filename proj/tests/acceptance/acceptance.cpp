// Acceptance suite: one PASS/FAIL line per criterion.

#include <sys/stat.h>
#include <unistd.h>
#include <utime.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mock_archive.hpp"
#include "revive/audit.hpp"
#include "revive/compress.hpp"
#include "revive/disarchive.hpp"
#include "revive/error.hpp"
#include "revive/fetch.hpp"
#include "revive/resolver.hpp"
#include "support.hpp"

using namespace revive;
namespace fs = std::filesystem;
using revive::testing::run;

namespace {

// Pinned tolerances and sizes.
constexpr std::size_t kCorpusSize = 200;
constexpr int kMaxMembers = 500;
constexpr double kRoundTripBudgetSeconds = 300.0;
/// Every tenth tarball goes through the whole catalog.
constexpr std::size_t kMatrixStride = 10;
constexpr std::size_t kSedRawLimit = 280 * 1024;
constexpr std::size_t kSedGzipLimit = 28 * 1024;
constexpr std::size_t kOracleTrees = 120;
constexpr std::size_t kFuzzIterations = 1000;
constexpr std::size_t kAuditRecords = 50;
constexpr double kCensusTolerance = 1e-9;
constexpr std::size_t kStarDependents = 184;

struct Verdict {
    bool pass = true;
    std::string detail;
    bool skipped = false;
};

class Check {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    Verdict verdict(const std::string& summary) const
    {
        Verdict v;
        v.pass = failed_ == 0;
        v.detail = summary;
        if (failed_) {
            v.detail += "; " + std::to_string(failed_) + " failure(s):";
            for (const auto& f : failures_) v.detail += " [" + f + "]";
        }
        return v;
    }

private:
    std::size_t failed_ = 0;
    std::vector<std::string> failures_;
};

/// Runs a helper program; any failure aborts the criterion.
std::string run_ok(const std::vector<std::string>& argv, std::string_view input = {})
{
    auto r = run(argv, input);
    if (r.status != 0) throw std::runtime_error(argv[0] + " exited " + std::to_string(r.status) + ": " + r.err);
    return r.out;
}

std::string oracle(const char* name) { return revive::testing::oracle_script(name).string(); }

// --- corpus ----------------------------------------------------------------------

Bytes oracle_compress(const std::string& variant, const Bytes& payload)
{
    if (variant == "plain") return payload;
    const auto& c = compress::compressor(variant);
    auto input = to_string(payload);
    std::string out;
    switch (c.family) {
    case compress::Family::gnu:
        out = c.rsyncable ? run_ok({"gzip", "-9", "-n", "-c", "--rsyncable"}, input)
                          : run_ok({"gzip", "-" + std::to_string(c.level), "-n", "-c"}, input);
        break;
    case compress::Family::zlib:
        out = run_ok({"python3", oracle("zlib_gzip.py"), std::to_string(c.level)}, input);
        break;
    case compress::Family::bzip2:
        out = run_ok({"bzip2", "-" + std::to_string(c.level), "-c"}, input);
        break;
    case compress::Family::xz:
        out = run_ok({"xz", "-" + std::to_string(c.level) + (c.extreme ? "e" : ""), "-c", "-T1"}, input);
        break;
    }
    return to_bytes(out);
}

std::string suffix_for(const std::string& variant)
{
    if (variant == "plain") return ".tar";
    switch (compress::compressor(variant).family) {
    case compress::Family::gnu:
    case compress::Family::zlib: return ".tar.gz";
    case compress::Family::bzip2: return ".tar.bz2";
    case compress::Family::xz: return ".tar.xz";
    }
    return ".tar";
}

Bytes content_bytes(std::mt19937_64& rng)
{
    static const std::size_t sizes[] = {0, 1, 10, 100, 511, 512, 513, 2000, 10000};
    std::size_t n = sizes[rng() % std::size(sizes)];
    return revive::testing::random_bytes(rng, n, rng() % 2 == 0);
}

/// Tarball written by GNU tar from a generated directory.
Bytes gnu_tarball(std::mt19937_64& rng, int members, const std::string& format, const fs::path& work)
{
    bool long_ok = format == "gnu" || format == "posix" || format == "oldgnu";
    bool big_mtime = format == "gnu" || format == "posix" || format == "oldgnu";
    auto root = work / "src";
    fs::remove_all(root);
    std::string top = "pkg";
    fs::create_directories(root / top);
    std::vector<fs::path> dirs{top};
    std::vector<fs::path> files;
    for (int i = 1; i < members; ++i) {
        auto parent = dirs[rng() % dirs.size()];
        std::string name = revive::testing::random_name(rng, 1, 12);
        if (rng() % 20 == 0)
            name = std::string(long_ok ? 100 + rng() % 30 : format == "ustar" ? 40 + rng() % 50 : 30, 'l') +
                   std::to_string(i);
        auto rel = parent / name;
        if (format == "v7" && rel.string().size() > 95) continue;
        if (format == "ustar" && rel.string().size() > 200) continue;
        std::error_code ec;
        if (fs::exists(root / rel, ec)) continue;
        int k = static_cast<int>(rng() % 100);
        if (k < 12 && dirs.size() < 40) {
            fs::create_directory(root / rel);
            fs::permissions(root / rel, (rng() % 2) ? fs::perms(0755) : fs::perms(0700));
            dirs.push_back(rel);
        } else if (k < 20) {
            fs::create_symlink(revive::testing::random_name(rng, 1, 20), root / rel);
        } else if (k < 24 && !files.empty()) {
            fs::create_hard_link(root / files[rng() % files.size()], root / rel);
        } else {
            write_file((root / rel).string(), content_bytes(rng));
            static const unsigned modes[] = {0644, 0755, 0600, 0444};
            fs::permissions(root / rel, fs::perms(modes[rng() % 4]));
            files.push_back(rel);
        }
    }
    std::uint64_t mtime = big_mtime && rng() % 3 == 0 ? 9000000000ull + rng() % 100000 : rng() % 2000000000ull;
    auto out = work / "out.tar";
    std::vector<std::string> argv{"tar", "--format=" + format, "--sort=name", "--mtime=@" + std::to_string(mtime),
                                  "--owner=" + std::to_string(rng() % 2000), "--group=" + std::to_string(rng() % 2000),
                                  "--numeric-owner", "-cf", out.string(), "-C", root.string()};
    if (members == 0) argv.push_back("--files-from=/dev/null");
    else argv.push_back(top);
    run_ok(argv);
    return read_file(out.string());
}

Bytes python_tarball(std::uint64_t seed, int members, const std::string& format, const fs::path& work)
{
    auto out = work / "py.tar";
    run_ok({"python3", oracle("make_tar.py"), out.string(), std::to_string(seed), std::to_string(members), format});
    return read_file(out.string());
}

bool round_trips(const Bytes& file, const std::string& name, std::string& why)
{
    try {
        auto d = disassemble(file, name);
        auto desc = read_description(write_description(d.description));
        MemoryContentProvider mem;
        mem.add(desc.leaf, d.content);
        if (assemble(desc, mem) == file) return true;
        why = "bytes differ";
    } catch (const std::exception& e) {
        why = e.what();
    }
    return false;
}

Verdict ac1()
{
    std::vector<std::string> variants{"plain"};
    for (const auto& c : compress::catalog()) variants.push_back(c.id);

    auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240101);
    TempDir work;
    Check check;
    std::map<std::string, std::size_t> per_variant;
    std::size_t round_trips_done = 0, max_members = 0;
    for (std::size_t i = 0; i < kCorpusSize; ++i) {
        int members = i == 0 ? 0 : i == 1 ? kMaxMembers : i % 10 == 0 ? static_cast<int>(rng() % (kMaxMembers + 1))
                                                                      : static_cast<int>(rng() % 60);
        max_members = std::max<std::size_t>(max_members, members);
        Bytes tar;
        static const char* gnu_formats[] = {"gnu", "posix", "ustar", "oldgnu", "v7"};
        static const char* py_formats[] = {"ustar", "gnu", "pax"};
        if (i % 2 == 0) tar = gnu_tarball(rng, members, gnu_formats[(i / 2) % 5], work.path());
        else tar = python_tarball(i, members, py_formats[(i / 2) % 3], work.path());

        std::string why;
        std::string base = "corpus-" + std::to_string(i);
        check.expect(round_trips(tar, base + ".tar", why), base + ".tar: " + why);
        ++round_trips_done;
        ++per_variant["plain"];
        std::vector<std::string> chosen{variants[1 + i % (variants.size() - 1)]};
        if (i % kMatrixStride == 3) chosen.assign(variants.begin() + 1, variants.end());
        for (const auto& v : chosen) {
            auto packed = oracle_compress(v, tar);
            check.expect(round_trips(packed, base + suffix_for(v), why), base + " " + v + ": " + why);
            ++round_trips_done;
            ++per_variant[v];
        }
    }
    for (const auto& v : variants) check.expect(per_variant[v] > 0, "variant " + v + " unused");
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.expect(secs < kRoundTripBudgetSeconds, "runtime " + std::to_string(secs) + "s over budget");
    std::ostringstream s;
    s << kCorpusSize << " tarballs, " << round_trips_done << " round trips over " << variants.size()
      << " variants, members 0.." << max_members << ", " << static_cast<int>(secs) << "s";
    return check.verdict(s.str());
}

// --- compressor identification ---------------------------------------------------------

Verdict ac2()
{
    std::mt19937_64 rng(7);
    TempDir work;
    std::vector<Bytes> payloads{python_tarball(99, 120, "gnu", work.path()), to_bytes(std::string(5000, 'a')), Bytes{}};
    Bytes mixed;
    for (int i = 0; i < 40; ++i) {
        auto b = revive::testing::random_bytes(rng, 800, i % 3 != 0);
        mixed.insert(mixed.end(), b.begin(), b.end());
    }
    payloads.push_back(mixed);

    Check check;
    std::size_t fixtures = 0;
    for (const auto& c : compress::catalog()) {
        for (std::size_t p = 0; p < payloads.size(); ++p) {
            ++fixtures;
            auto original = oracle_compress(c.id, payloads[p]);
            try {
                auto guess = compress::guess_compressor(payloads[p], original);
                auto dec = compress::decompress(original);
                Bytes again;
                if (dec.format == compress::Format::gzip)
                    again = compress::recompress(payloads[p], guess, dec.members.at(0).header);
                else
                    again = compress::recompress(payloads[p], guess, {}, dec.xz.check);
                check.expect(again == original, c.id + " payload " + std::to_string(p) + " -> " + guess.id);
            } catch (const std::exception& e) {
                check.expect(false, c.id + " payload " + std::to_string(p) + ": " + e.what());
            }
        }
    }
    return check.verdict(std::to_string(fixtures) + " fixtures over " + std::to_string(compress::catalog().size()) +
                         " catalog entries");
}

// --- description size ------------------------------------------------------------------

Verdict ac3()
{
    const char* path = std::getenv("REVIVE_SED_TARBALL");
    if (!path || !*path) return {true, "REVIVE_SED_TARBALL not set; needs the published sed-4.8.tar.gz", true};
    auto file = read_file(path);
    auto d = disassemble(file, "sed-4.8.tar.gz");
    auto text = write_description(d.description);
    auto packed = run_ok({"gzip", "-9", "-n", "-c"}, text);
    Check check;
    check.expect(text.size() <= kSedRawLimit, "raw " + std::to_string(text.size()));
    check.expect(packed.size() <= kSedGzipLimit, "gzip " + std::to_string(packed.size()));
    MemoryContentProvider mem;
    mem.add(d.description.leaf, d.content);
    check.expect(assemble(d.description, mem) == file, "round trip");
    return check.verdict("description " + std::to_string(text.size()) + " bytes, " + std::to_string(packed.size()) +
                         " bytes gzip -9");
}

// --- identifiers ---------------------------------------------------------------------

void collect_files(const NarNode& n, std::vector<const NarNode*>& out)
{
    if (n.is_regular()) out.push_back(&n);
    if (n.is_directory())
        for (const auto& [name, child] : n.entries()) collect_files(child, out);
}

Verdict ac4()
{
    std::mt19937_64 rng(4242);
    Check check;
    std::size_t blobs = 0;
    for (std::size_t i = 0; i < kOracleTrees; ++i) {
        TempDir tmp;
        auto tree = revive::testing::random_tree(rng, 3, 6, false);
        auto dir = tmp.path() / "t";
        tree_to_disk(tree, dir);
        auto label = "tree " + std::to_string(i);
        check.expect(to_hex(swhid_for_directory(tree).digest) == revive::testing::git_tree_hex(dir), label + " swhid");
        check.expect(swhid_for_directory(dir) == swhid_for_directory(tree), label + " swhid from disk");
        auto nar = revive::testing::nar_oracle(dir);
        check.expect(nar_hash(tree).hex() == nar.hex, label + " nar");
        check.expect(nar_hash(tree_from_disk(dir)).base32() == nar.base32, label + " nar base32");
        std::vector<const NarNode*> files;
        collect_files(tree, files);
        for (std::size_t k = 0; k < files.size() && k < 3; ++k, ++blobs)
            check.expect(to_hex(swhid_for_content(files[k]->contents()).digest) ==
                             revive::testing::git_blob_hex(files[k]->contents()),
                         label + " blob");
    }

    // Empty directories: skipped by the identifier like git does, kept by nar.
    TempDir tmp;
    auto dir = tmp.path() / "e";
    NarNode with_empty = NarNode::directory();
    with_empty.set("a", NarNode::regular(to_bytes("a\n")));
    with_empty.set("empty", NarNode::directory());
    tree_to_disk(with_empty, dir);
    NarNode without = NarNode::directory();
    without.set("a", NarNode::regular(to_bytes("a\n")));
    auto git = revive::testing::git_tree_hex(dir);
    check.expect(to_hex(swhid_for_directory(with_empty).digest) == git, "empty dir swhid vs git");
    check.expect(swhid_for_directory(dir) == swhid_for_directory(without), "empty dir swhid from disk");
    check.expect(!(nar_hash(with_empty) == nar_hash(without)), "nar must keep the empty dir");
    check.expect(nar_hash(tree_from_disk(dir)).hex() == revive::testing::nar_oracle(dir).hex, "nar with empty dir");

    // Metadata invariance and executable-bit sensitivity.
    auto before = nar_hash(tree_from_disk(dir));
    struct utimbuf times {
        12345, 67890
    };
    ::utime((dir / "a").c_str(), &times);
    ::utime(dir.c_str(), &times);
    bool chowned = ::lchown((dir / "a").c_str(), 4321, 4321) == 0;
    check.expect(nar_hash(tree_from_disk(dir)) == before, "mtime/uid change altered nar");
    fs::permissions(dir / "a", fs::perms::owner_exec, fs::perm_options::add);
    check.expect(!(nar_hash(tree_from_disk(dir)) == before), "exec bit ignored by nar");
    check.expect(!(swhid_for_directory(dir) == swhid_for_directory(with_empty)), "exec bit ignored by swhid");

    return check.verdict(std::to_string(kOracleTrees) + " trees, " + std::to_string(blobs) +
                         " blobs vs git and nar oracles" + (chowned ? "" : " (uid change not permitted)"));
}

// --- resolver ladder ---------------------------------------------------------------

const std::string kRepo = "https://git.example.org/project.git";

NarNode corrupt(const NarNode& tree, std::mt19937_64& rng)
{
    NarNode t = tree;
    auto pick = rng() % 3;
    if (!t.lookup("README")) pick = 1;
    switch (pick) {
    case 0: t.set("README", NarNode::regular(revive::testing::random_bytes(rng, 1 + rng() % 50, false))); break;
    case 1: t.set("extra-" + std::to_string(rng() % 1000), NarNode::regular(to_bytes("x"))); break;
    default: t.set("README", NarNode::regular(t.lookup("README")->contents(), true)); break;
    }
    return t;
}

NarNode project(std::mt19937_64& rng)
{
    NarNode t = revive::testing::random_tree(rng, 2, 4, false);
    t.set("README", NarNode::regular(revive::testing::random_bytes(rng, 64, true)));
    return t;
}

struct Tarball {
    Bytes file;
    Disassembly d;
};

Tarball make_tarball(std::mt19937_64& rng, const fs::path& work, int seed)
{
    Tarball t;
    auto tar = python_tarball(seed, 8 + rng() % 10, "gnu", work);
    t.file = oracle_compress(seed % 2 ? "gnu-9" : "xz-6", tar);
    t.d = disassemble(t.file, "pkg.tar" + std::string(seed % 2 ? ".gz" : ".xz"));
    return t;
}

ResolverOptions fast()
{
    ResolverOptions o;
    o.poll_interval = std::chrono::seconds(1);
    o.vault_deadline = std::chrono::seconds(30);
    return o;
}

SourceRecord git_record(const NarNode& tree, const Sha1Digest& commit, bool by_tag)
{
    SourceRecord r;
    r.method = FetchMethod::git;
    r.urls = {kRepo};
    r.nar_sha256 = nar_hash(tree);
    r.git_ref = by_tag ? GitRef{std::nullopt, "v1.0"} : GitRef{commit, std::nullopt};
    return r;
}

Verdict ac5()
{
    std::mt19937_64 rng(5);
    Check check;
    TempDir work;
    LocalDescriptionDb db(work.path() / "db");
    std::vector<Tarball> tarballs;
    for (int i = 0; i < 6; ++i) {
        tarballs.push_back(make_tarball(rng, work.path(), 1000 + i));
        db.store(tarballs.back().d.description);
    }
    Sha1Digest commit = digest_from_hex<20>("309cf2674ee7a0749978cf8265ab91a60aea0f7d");
    std::set<Provenance> reached;

    auto expect_rung = [&](const std::string& what, const std::function<Resolution()>& f, Provenance want) {
        try {
            auto r = f();
            check.expect(r.provenance == want && r.verified, what + ": got " + std::string(to_string(r.provenance)));
            if (r.provenance == want) reached.insert(want);
            return r;
        } catch (const std::exception& e) {
            check.expect(false, what + ": " + e.what());
        }
        return Resolution{};
    };

    {
        auto tree = project(rng);
        FixtureFetcher f;
        f.add_git(kRepo, to_hex(commit), tree);
        revive::testing::MockArchive swh;
        expect_rung("upstream", [&] { return resolve(git_record(tree, commit, false), &swh.client(), nullptr, f, fast()); },
                    Provenance::upstream);
        check.expect(swh.calls() == 0, "healthy upstream consulted the archive");
    }
    {
        // (a) tampered upstream advances the ladder; (b) the Vault download is a redirect.
        auto tree = project(rng);
        FixtureFetcher f;
        f.add_git(kRepo, to_hex(commit), corrupt(tree, rng));
        revive::testing::MockArchive swh;
        auto dir = swhid_for_directory(tree);
        swh.extid(nar_hash(tree), dir);
        swh.vault(dir, tree, 2);
        auto r = expect_rung("tampered upstream -> extid",
                             [&] { return resolve(git_record(tree, commit, false), &swh.client(), nullptr, f, fast()); },
                             Provenance::swh_extid);
        check.expect(!r.trail.empty() && r.trail[0].kind == ErrorKind::HashMismatch, "tamper not recorded");
        check.expect(swh.transport().count("GET", "https://objects.example/") == 1, "redirect not followed");
        check.expect(r.tree && *r.tree == tree, "extid tree");
    }
    {
        auto tree = project(rng);
        FixtureFetcher f;
        f.add_failure(kRepo, ErrorKind::NotFound);
        revive::testing::MockArchive swh;
        auto dir = swhid_for_directory(tree);
        swh.revision(commit, dir);
        swh.vault(dir, tree);
        expect_rung("revision", [&] { return resolve(git_record(tree, commit, false), &swh.client(), nullptr, f, fast()); },
                    Provenance::swh_revision);
    }
    {
        auto tree = project(rng);
        FixtureFetcher f;
        f.add_git(kRepo, "v1.0", corrupt(tree, rng));
        revive::testing::MockArchive swh;
        auto dir = swhid_for_directory(tree);
        swh.tag(kRepo, "v1.0", commit, true);
        swh.revision(commit, dir);
        swh.vault(dir, tree);
        expect_rung("tag", [&] { return resolve(git_record(tree, commit, true), &swh.client(), nullptr, f, fast()); },
                    Provenance::swh_tag);
    }
    {
        const auto& t = tarballs[0];
        SourceRecord r;
        r.urls = {"https://ftp.example.org/pkg.tar.gz", "https://mirror.example.org/pkg.tar.gz"};
        r.file_sha256 = sha256(t.file);
        FixtureFetcher f;
        f.add_failure(r.urls[0], ErrorKind::NotFound);
        Bytes altered = t.file;
        altered[altered.size() / 2] ^= 1;
        f.add_file(r.urls[1], altered);
        revive::testing::MockArchive swh;
        swh.vault(std::get<DirectoryRef>(t.d.description.leaf).addresses.at(0), t.d.content);
        auto res = expect_rung("disarchive", [&] { return resolve(r, &swh.client(), &db, f, fast()); },
                               Provenance::disarchive_rebuild);
        check.expect(res.file && *res.file == t.file, "rebuilt bytes");
    }

    // Every rung serves wrong bytes.
    std::size_t failures = 0, unverified = 0, other = 0;
    std::map<std::size_t, std::size_t> trail_lengths;
    for (std::size_t it = 0; it < kFuzzIterations; ++it) {
        revive::testing::MockArchive swh;
        FixtureFetcher f;
        SourceRecord record;
        auto bad = [&] { return rng() % 4 != 0; };
        if (rng() % 3 == 0) {
            const auto& t = tarballs[rng() % tarballs.size()];
            record.urls = {"https://ftp.example.org/a.tar", "https://mirror.example.org/a.tar"};
            record.file_sha256 = sha256(t.file);
            for (const auto& u : record.urls) {
                if (bad()) {
                    Bytes wrong = t.file;
                    wrong[rng() % wrong.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
                    f.add_file(u, wrong);
                } else {
                    f.add_failure(u, ErrorKind::NotFound);
                }
            }
            auto address = std::get<DirectoryRef>(t.d.description.leaf).addresses.at(0);
            if (bad()) swh.vault(address, corrupt(t.d.content.is_directory() ? t.d.content : NarNode::directory(), rng));
        } else {
            auto tree = project(rng);
            bool by_tag = rng() % 2;
            record = git_record(tree, commit, by_tag);
            if (bad()) f.add_git(kRepo, by_tag ? "v1.0" : to_hex(commit), corrupt(tree, rng));
            else f.add_failure(kRepo, ErrorKind::TransportError);
            auto served = corrupt(tree, rng);
            auto wrong_dir = swhid_for_directory(served);
            if (bad()) swh.extid(nar_hash(tree), rng() % 2 ? wrong_dir : swhid_for_directory(tree));
            if (bad()) swh.revision(commit, wrong_dir);
            if (bad()) swh.tag(kRepo, "v1.0", commit, rng() % 2);
            swh.vault(wrong_dir, served);
            swh.vault(swhid_for_directory(tree), corrupt(tree, rng));
        }
        try {
            resolve(record, &swh.client(), &db, f, fast());
            ++unverified;
        } catch (const ResolutionFailure& e) {
            if (e.kind() == ErrorKind::AllPathsFailed) ++failures;
            else ++other;
            ++trail_lengths[e.trail().size()];
        } catch (const std::exception&) {
            ++other;
        }
    }
    check.expect(unverified == 0, std::to_string(unverified) + " unverified successes");
    check.expect(other == 0, std::to_string(other) + " non-AllPathsFailed outcomes");
    check.expect(reached.size() == 5, std::to_string(reached.size()) + " of 5 rungs reached");
    return check.verdict(std::to_string(reached.size()) + " rungs; " + std::to_string(kFuzzIterations) +
                         " fuzz iterations, " + std::to_string(failures) + " AllPathsFailed, " +
                         std::to_string(unverified) + " unverified successes");
}

// --- audit -------------------------------------------------------------------------

/// Ground truth for one record of the mock manifest.
struct Truth {
    audit::RotStatus rot;
    audit::CoverageStatus coverage;
    std::string kind;
};

Verdict ac6()
{
    using audit::CoverageStatus;
    using audit::RotStatus;
    // Hand-counted layout: category, how many, upstream behaviour, archived?
    struct Category {
        const char* kind;
        int count;
        RotStatus rot;
        CoverageStatus coverage;
    };
    const Category layout[] = {
        {"tar.gz", 9, RotStatus::available, CoverageStatus::stored},
        {"tar.gz", 4, RotStatus::available, CoverageStatus::missing},
        {"tar.xz", 5, RotStatus::available, CoverageStatus::stored},
        {"tar.bz2", 3, RotStatus::available, CoverageStatus::missing},
        {"patch", 4, RotStatus::available, CoverageStatus::stored},
        {"tar.lz", 2, RotStatus::available, CoverageStatus::undetermined},
        {"tar.gz", 5, RotStatus::missing, CoverageStatus::undetermined},
        {"tar.gz", 3, RotStatus::hash_mismatch, CoverageStatus::undetermined},
        {"git", 8, RotStatus::available, CoverageStatus::stored},
        {"git", 2, RotStatus::available, CoverageStatus::missing},
        {"git", 2, RotStatus::missing, CoverageStatus::undetermined},
        {"svn", 2, RotStatus::available, CoverageStatus::stored},
        {"hg", 1, RotStatus::skipped, CoverageStatus::undetermined},
    };
    // 9+4+5+3+4+2+5+3+8+2+2+2+1 = 50
    constexpr std::size_t kHandTotal = 50;
    constexpr std::size_t kHandAvailable = 9 + 4 + 5 + 3 + 4 + 2 + 8 + 2 + 2;
    constexpr std::size_t kHandStored = 9 + 5 + 4 + 8 + 2;
    constexpr std::size_t kHandUndetermined = 2 + 5 + 3 + 2 + 1;

    std::mt19937_64 rng(66);
    TempDir work;
    FixtureFetcher f;
    std::vector<SourceRecord> records;
    std::vector<Truth> truth;
    std::vector<Swhid> archived;
    int n = 0;
    for (const auto& cat : layout) {
        for (int i = 0; i < cat.count; ++i, ++n) {
            std::string kind = cat.kind;
            SourceRecord r;
            r.package = "p" + std::to_string(n);
            NarNode tree = project(rng);
            std::vector<Swhid> ids;
            if (kind == "git" || kind == "svn" || kind == "hg") {
                r.method = fetch_method_from_string(kind);
                r.urls = {"https://vcs.example/" + r.package};
                r.nar_sha256 = nar_hash(tree);
                if (kind == "git") r.git_ref = GitRef{std::nullopt, "v1"};
                if (kind == "svn") r.svn_revision = 100 + n;
                if (cat.rot == RotStatus::available && kind == "git") f.add_git(r.urls[0], "v1", tree);
                if (cat.rot == RotStatus::available && kind == "svn") f.add_svn(r.urls[0], 100 + n, tree);
                if (cat.rot == RotStatus::missing) f.add_failure(r.urls[0], ErrorKind::NotFound);
                ids.push_back(swhid_for_directory(tree));
            } else {
                Bytes file;
                if (kind == "patch") {
                    file = revive::testing::random_bytes(rng, 300, true);
                    ids.push_back(swhid_for_content(file));
                } else if (kind == "tar.lz") {
                    file = to_bytes("LZIP\x01\x0c" + std::to_string(n));
                } else {
                    auto tar = python_tarball(5000 + n, 5, "ustar", work.path());
                    std::string variant = kind == "tar.gz" ? "gnu-6" : kind == "tar.xz" ? "xz-6" : "bzip2-9";
                    file = oracle_compress(variant, tar);
                    ids.push_back(std::get<DirectoryRef>(disassemble(file, "x." + kind).description.leaf).addresses[0]);
                }
                r.urls = {"https://dl.example/" + r.package + "." + kind};
                r.file_sha256 = sha256(file);
                if (cat.rot == RotStatus::available) f.add_file(r.urls[0], file);
                if (cat.rot == RotStatus::missing) f.add_failure(r.urls[0], ErrorKind::NotFound);
                if (cat.rot == RotStatus::hash_mismatch) {
                    file.push_back(0);
                    f.add_file(r.urls[0], file);
                }
            }
            if (cat.coverage == CoverageStatus::stored) archived.insert(archived.end(), ids.begin(), ids.end());
            records.push_back(r);
            truth.push_back({cat.rot, cat.coverage, kind});
        }
    }

    Check check;
    check.expect(records.size() == kAuditRecords && kAuditRecords == kHandTotal, "manifest size");
    std::mt19937_64 shuffle_rng(3);
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::vector<SourceRecord> shuffled;
    for (auto i : order) shuffled.push_back(records[i]);

    std::vector<audit::SnapshotReport> reports;
    for (const auto& [label, input] :
         std::vector<std::pair<std::string, const std::vector<SourceRecord>*>>{{"first", &records}, {"shuffled", &shuffled}}) {
        auto scanned = audit::scan(*input, f, label, 4);
        revive::testing::MockArchive swh;
        swh.known(archived);
        audit::coverage(scanned, swh.client());
        for (std::size_t i = 0; i < scanned.size(); ++i) {
            std::size_t t = input == &records ? i : order[i];
            check.expect(scanned[i].rot == truth[t].rot, label + " rot of record " + std::to_string(t));
            check.expect(scanned[i].coverage == truth[t].coverage, label + " coverage of record " + std::to_string(t) +
                                                                         " (" + truth[t].kind + ")");
        }
        auto rep = audit::report(scanned, label, "2024-01-0" + std::to_string(reports.size() + 1));
        std::map<RotStatus, std::size_t> rot_count;
        std::map<CoverageStatus, std::size_t> cov_count;
        for (const auto& t : truth) {
            ++rot_count[t.rot];
            ++cov_count[t.coverage];
        }
        for (auto s : {RotStatus::available, RotStatus::missing, RotStatus::hash_mismatch, RotStatus::skipped})
            check.expect(rep.rot_fraction(s) == static_cast<double>(rot_count[s]) / kHandTotal, label + " rot fraction");
        for (auto s : {CoverageStatus::stored, CoverageStatus::missing, CoverageStatus::undetermined})
            check.expect(rep.coverage_fraction(s) == static_cast<double>(cov_count[s]) / kHandTotal,
                         label + " coverage fraction");
        check.expect(rot_count[RotStatus::available] == kHandAvailable, "hand count available");
        check.expect(cov_count[CoverageStatus::stored] == kHandStored, "hand count stored");
        check.expect(cov_count[CoverageStatus::undetermined] == kHandUndetermined, "hand count undetermined");
        reports.push_back(rep);
    }

    auto rows = [](const std::string& csv) {
        std::vector<std::vector<std::string>> out;
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::istringstream l(line);
            std::string cell;
            while (std::getline(l, cell, ',')) cells.push_back(cell);
            out.push_back(cells);
        }
        return out;
    };
    for (const auto& row : rows(audit::coverage_csv(reports))) {
        check.expect(std::stoul(row[4]) + std::stoul(row[5]) + std::stoul(row[6]) == std::stoul(row[7]),
                     "stored+missing+undetermined != total");
        check.expect(std::stoul(row[7]) == kHandTotal, "coverage total");
    }
    for (const auto& row : rows(audit::census_csv(reports))) {
        auto sum = [&](std::size_t from, std::size_t to) {
            double s = 0;
            for (std::size_t i = from; i < to; ++i) s += std::stod(row[i]);
            return s;
        };
        check.expect(std::abs(sum(1, 3) - 1) <= kCensusTolerance, "vcs/download columns");
        check.expect(std::abs(sum(3, 6) - 1) <= kCensusTolerance, "vcs type columns");
        check.expect(std::abs(sum(6, 13) - 1) <= kCensusTolerance, "download type columns");
    }
    check.expect(reports[0].types.high == reports[1].types.high && reports[0].types.vcs == reports[1].types.vcs &&
                     reports[0].types.download == reports[1].types.download,
                 "census depends on record order");
    return check.verdict(std::to_string(kAuditRecords) + " records, 2 snapshots, stored " + std::to_string(kHandStored) +
                         "/" + std::to_string(kHandTotal));
}

// --- impact ----------------------------------------------------------------------

std::vector<std::size_t> brute_closure(const std::vector<std::string>& nodes,
                                       const std::vector<std::pair<std::string, std::string>>& edges)
{
    std::size_t n = nodes.size();
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) idx[nodes[i]] = i;
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) reach[i][i] = true;
    for (const auto& [dependent, dependency] : edges) reach[idx[dependent]][idx[dependency]] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    std::vector<std::size_t> out(n, 0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) out[j] += reach[i][j];
    return out;
}

Verdict ac7()
{
    Check check;
    auto records_for = [](const std::vector<std::string>& nodes) {
        std::vector<SourceRecord> out;
        for (const auto& n : nodes) {
            SourceRecord r;
            r.urls = {"https://dl.example/" + n + ".tar.gz"};
            r.package = n;
            out.push_back(r);
        }
        return out;
    };
    auto compare = [&](const std::string& what, const std::vector<std::string>& nodes,
                       const std::vector<std::pair<std::string, std::string>>& edges) {
        auto got = audit::impact_rank(records_for(nodes), edges);
        check.expect(got == brute_closure(nodes, edges), what);
        return got;
    };

    auto diamond = compare("diamond", {"a", "b", "c", "d"}, {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}});
    check.expect(diamond == std::vector<std::size_t>{1, 2, 2, 4}, "diamond counts");
    std::vector<std::string> chain;
    std::vector<std::pair<std::string, std::string>> chain_edges;
    for (int i = 0; i < 10; ++i) {
        chain.push_back("c" + std::to_string(i));
        if (i) chain_edges.emplace_back(chain[i - 1], chain[i]);
    }
    auto c = compare("chain", chain, chain_edges);
    check.expect(c.back() == 10 && c.front() == 1, "chain ends");

    std::mt19937_64 rng(77);
    for (int g = 0; g < 30; ++g) {
        std::vector<std::string> nodes;
        std::vector<std::pair<std::string, std::string>> edges;
        int n = 2 + static_cast<int>(rng() % 25);
        for (int i = 0; i < n; ++i) nodes.push_back("n" + std::to_string(i));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng() % 5 == 0) edges.emplace_back(nodes[i], nodes[j]);
        compare("random dag " + std::to_string(g), nodes, edges);
    }

    std::vector<std::string> star{"glibc"};
    std::vector<std::pair<std::string, std::string>> star_edges;
    for (std::size_t i = 0; i < kStarDependents; ++i) {
        star.push_back("dependent" + std::to_string(i));
        star_edges.emplace_back(star.back(), "glibc");
    }
    auto s = compare("star", star, star_edges);
    check.expect(s[0] == kStarDependents + 1, "star center " + std::to_string(s[0]));

    try {
        audit::impact_rank(records_for({"x", "y"}), {{"x", "y"}, {"y", "x"}});
        check.expect(false, "cycle accepted");
    } catch (const Error& e) {
        check.expect(e.kind() == ErrorKind::CycleDetected, "cycle kind");
    }
    return check.verdict("diamond, chain, 30 random DAGs vs brute-force closure; star center " + std::to_string(s[0]));
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"AC1 round-trip totality", ac1},
        {"AC2 compressor identification", ac2},
        {"AC3 sed-scale description size", ac3},
        {"AC4 identifier oracle equivalence", ac4},
        {"AC5 resolver ladder conformance", ac5},
        {"AC6 audit arithmetic", ac6},
        {"AC7 impact rank", ac7},
    };
    int failed = 0;
    for (const auto& [name, run_criterion] : criteria) {
        Verdict v;
        try {
            v = run_criterion();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failed;
        std::cout << (v.skipped ? "SKIP " : v.pass ? "PASS " : "FAIL ") << name << " (" << v.detail << ")" << std::endl;
    }
    return failed ? 1 : 0;
}
