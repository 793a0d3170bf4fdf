#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "revive/error.hpp"
#include "revive/heritage.hpp"
#include "support.hpp"

using namespace revive;
using revive::testing::kArchive;
using json = nlohmann::json;

namespace {

Swhid dir_id(int n)
{
    Swhid s{SwhidType::dir, {}};
    s.digest[19] = static_cast<std::uint8_t>(n);
    s.digest[18] = static_cast<std::uint8_t>(n >> 8);
    return s;
}

struct Client {
    ScriptedTransport t;
    ManualClock clock;
    ArchiveEndpoint ep;
    std::unique_ptr<ArchiveClient> c;

    explicit Client(std::optional<std::string> token = std::nullopt)
    {
        ep.base_url = kArchive;
        ep.auth_token = std::move(token);
        c = std::make_unique<ArchiveClient>(ep, t, clock);
    }
    ArchiveClient* operator->() { return c.get(); }
    std::string api(const std::string& path) { return kArchive + path; }
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

HttpResponse status(int s)
{
    return HttpResponse{s, {}, ""};
}

} // namespace

TEST(Heritage, EndpointPathsMatchFixture)
{
    std::ifstream in(revive::testing::source_dir() / "tests/fixtures/swh_endpoints.json");
    auto j = json::parse(in);
    EXPECT_EQ(j["known"], endpoints::known);
    EXPECT_EQ(j["extid_nar_sha256"], endpoints::extid_nar_sha256);
    EXPECT_EQ(j["revision"], endpoints::revision);
    EXPECT_EQ(j["release"], endpoints::release);
    EXPECT_EQ(j["origin_latest_visit"], endpoints::origin_latest_visit);
    EXPECT_EQ(j["snapshot"], endpoints::snapshot);
    EXPECT_EQ(j["vault_flat"], endpoints::vault_flat);
    EXPECT_EQ(j["save"], endpoints::save);
    EXPECT_EQ(j["content_raw"], endpoints::content_raw);
    EXPECT_EQ(j["content_sha256"], endpoints::content_sha256);
    EXPECT_EQ(expand_path(endpoints::revision, {{"sha1", "ab"}}), "/api/1/revision/ab/");
    EXPECT_THROW(expand_path(endpoints::revision, {}), std::invalid_argument);
}

TEST(Heritage, KnownQueries)
{
    Client c;
    auto a = dir_id(1), b = dir_id(2);
    c.t.on("POST", c.api(endpoints::known), [&](const HttpRequest& r) {
        json out = json::object();
        for (const auto& id : json::parse(r.body)) out[id.get<std::string>()] = {{"known", id == a.to_string()}};
        return json_response(200, out.dump());
    });
    auto res = c->known({a, b});
    EXPECT_TRUE(res.at(a));
    EXPECT_FALSE(res.at(b));
    EXPECT_EQ(kind_of([&] { c->known({}); }), ErrorKind::PreconditionViolation);
}

TEST(Heritage, KnownBatchesByThousand)
{
    Client c;
    c.t.on("POST", c.api(endpoints::known), [](const HttpRequest& r) {
        json out = json::object();
        for (const auto& id : json::parse(r.body)) out[id.get<std::string>()] = {{"known", true}};
        return json_response(200, out.dump());
    });
    std::vector<Swhid> ids;
    for (int i = 0; i < 2500; ++i) ids.push_back(dir_id(i));
    EXPECT_EQ(c->known(ids).size(), 2500u);
    EXPECT_EQ(c.t.count(), 3u);
}

TEST(Heritage, KnownResponseMissingAnId)
{
    Client c;
    c.t.on("POST", c.api(endpoints::known), json_response(200, "{}"));
    EXPECT_EQ(kind_of([&] { c->known({dir_id(1)}); }), ErrorKind::TransportError);
}

TEST(Heritage, ExtidResolution)
{
    Client c;
    NarDigest d;
    d.bytes[0] = 0xab;
    auto target = dir_id(7);
    c.t.on("GET", c.api(expand_path(endpoints::extid_nar_sha256, {{"hex", d.hex()}})),
           json_response(200, json{{"extid_type", "nar-sha256"}, {"target", target.to_string()}}.dump()));
    EXPECT_EQ(c->resolve_extid_nar_sha256(d), target);
    NarDigest other;
    EXPECT_EQ(kind_of([&] { c->resolve_extid_nar_sha256(other); }), ErrorKind::NotFound);
}

TEST(Heritage, TruncatedPayloadIsADecodeError)
{
    Client c;
    NarDigest d;
    c.t.on("GET", c.api(expand_path(endpoints::extid_nar_sha256, {{"hex", d.hex()}})),
           json_response(200, R"({"target": "swh:1:dir:00)"));
    EXPECT_EQ(kind_of([&] { c->resolve_extid_nar_sha256(d); }), ErrorKind::TransportError);
}

TEST(Heritage, RevisionLookup)
{
    Client c;
    auto commit = digest_from_hex<20>("309cf2674ee7a0749978cf8265ab91a60aea0f7d");
    auto dir = dir_id(3);
    c.t.on("GET", c.api(expand_path(endpoints::revision, {{"sha1", to_hex(commit)}})),
           json_response(200, json{{"id", to_hex(commit)}, {"directory", to_hex(dir.digest)}}.dump()));
    auto info = c->lookup_revision(commit);
    EXPECT_EQ(info.directory, dir);
    EXPECT_EQ(info.revision.to_string(), "swh:1:rev:309cf2674ee7a0749978cf8265ab91a60aea0f7d");
    Sha1Digest unknown{};
    EXPECT_EQ(kind_of([&] { c->lookup_revision(unknown); }), ErrorKind::NotFound);
}

TEST(Heritage, OriginTags)
{
    Client c;
    const std::string origin = "https://github.com/scikit-learn/scikit-learn";
    std::string snp(40, 'a'), rel(40, 'b'), rev(40, 'c'), rev2(40, 'd');
    c.t.on("GET", c.api(expand_path(endpoints::origin_latest_visit, {{"url", origin}})),
           json_response(200, json{{"snapshot", snp}, {"status", "full"}}.dump()));
    auto page1 = json_response(200, json{{"branches",
                                          {{"HEAD", {{"target", "refs/heads/main"}, {"target_type", "alias"}}},
                                           {"refs/tags/1.3.2", {{"target", rel}, {"target_type", "release"}}}}}}
                                        .dump());
    page1.headers.emplace_back("Link", "<" + c.api("/api/1/snapshot/" + snp + "/?branches_from=refs/tags/2") +
                                           ">; rel=\"next\"");
    c.t.on("GET", c.api(expand_path(endpoints::snapshot, {{"sha1", snp}})), page1);
    c.t.on("GET", c.api("/api/1/snapshot/" + snp + "/?branches_from=refs/tags/2"),
           json_response(200, json{{"branches",
                                    {{"refs/tags/2.0", {{"target", rev2}, {"target_type", "revision"}}},
                                     {"refs/tags/latest", {{"target", "refs/tags/2.0"}, {"target_type", "alias"}}}}}}
                                  .dump()));
    c.t.on("GET", c.api(expand_path(endpoints::release, {{"sha1", rel}})),
           json_response(200, json{{"target", rev}, {"target_type", "revision"}}.dump()));
    EXPECT_EQ(to_hex(c->lookup_origin_tag(origin, "1.3.2")), rev);
    EXPECT_EQ(to_hex(c->lookup_origin_tag(origin, "2.0")), rev2);
    EXPECT_EQ(to_hex(c->lookup_origin_tag(origin, "latest")), rev2);
    EXPECT_EQ(kind_of([&] { c->lookup_origin_tag(origin, "9.9"); }), ErrorKind::TagNotFound);
    EXPECT_EQ(kind_of([&] { c->lookup_origin_tag("https://example.org/none", "1"); }), ErrorKind::OriginNotFound);
}

TEST(Heritage, VaultDoneAtOnceWithRedirect)
{
    Client c;
    NarNode tree = NarNode::directory();
    tree.set("a", NarNode::regular(to_bytes("x"), true));
    tree.set("l", NarNode::symlink("a"));
    auto dir = swhid_for_directory(tree);
    revive::testing::serve_vault(c.t, dir, revive::testing::vault_bundle(tree));
    EXPECT_EQ(c->vault_fetch(dir, std::chrono::seconds(10), std::chrono::minutes(5)), tree);
    EXPECT_EQ(c.t.count("GET", "https://objects.example/"), 1u);
}

TEST(Heritage, VaultCookingFlow)
{
    Client c;
    NarNode tree = NarNode::directory();
    tree.set("f", NarNode::regular(to_bytes("y")));
    auto dir = swhid_for_directory(tree);
    auto path = c.api(expand_path(endpoints::vault_flat, {{"swhid", dir.to_string()}}));
    c.t.on("GET", path, status(404));
    c.t.on("GET", path, json_response(200, R"({"status":"pending"})"));
    c.t.on("GET", path, json_response(200, R"({"status":"done","fetch_url":")" + path + R"(raw/"})"));
    c.t.on("POST", path, json_response(200, R"({"status":"new"})"));
    HttpResponse bundle{200, {}, to_string(revive::testing::vault_bundle(tree))};
    c.t.on("GET", path + "raw/", bundle);
    EXPECT_EQ(c->vault_fetch(dir, std::chrono::seconds(10), std::chrono::minutes(5)), tree);
    EXPECT_EQ(c.t.count("POST", path), 1u);
}

TEST(Heritage, VaultDeadline)
{
    Client c;
    auto dir = dir_id(4);
    auto path = c.api(expand_path(endpoints::vault_flat, {{"swhid", dir.to_string()}}));
    c.t.on("GET", path, json_response(200, R"({"status":"pending"})"));
    try {
        c->vault_fetch(dir, std::chrono::seconds(10), std::chrono::seconds(30));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DeadlineExceeded);
        EXPECT_NE(std::string(e.what()).find("pending"), std::string::npos);
    }
    EXPECT_EQ(c.t.count("GET", path), 4u);
}

TEST(Heritage, VaultFailure)
{
    Client c;
    auto dir = dir_id(5);
    auto path = c.api(expand_path(endpoints::vault_flat, {{"swhid", dir.to_string()}}));
    c.t.on("GET", path, json_response(200, R"({"status":"failed","progress_message":"boom"})"));
    EXPECT_EQ(kind_of([&] { c->vault_fetch(dir, std::chrono::seconds(1), std::chrono::seconds(30)); }),
              ErrorKind::CookingFailed);
}

TEST(Heritage, SaveCodeNow)
{
    Client c;
    const std::string origin = "https://git.example.org/project.git";
    auto path = c.api(expand_path(endpoints::save, {{"type", "git"}, {"url", origin}}));
    c.t.on("POST", path, json_response(200, R"({"save_request_status":"accepted","save_task_status":"pending"})"));
    c.t.on("POST", path, json_response(200, R"({"save_request_status":"pending","save_task_status":"not created"})"));
    EXPECT_EQ(c->save_code_now(origin, VisitType::git).status, SaveStatus::accepted);
    EXPECT_EQ(c->save_code_now(origin, VisitType::git).status, SaveStatus::pending);

    auto before = c.t.count();
    EXPECT_EQ(kind_of([&] { c->save_code_now("https://ftp.gnu.org/gnu/sed/sed-4.8.tar.gz", VisitType::git); }),
              ErrorKind::PreconditionViolation);
    EXPECT_EQ(c.t.count(), before);

    auto bad = c.api(expand_path(endpoints::save, {{"type", "git"}, {"url", "https://blocked.example/r"}}));
    c.t.on("POST", bad, json_response(400, R"({"reason":"origin url is not allowed"})"));
    EXPECT_EQ(kind_of([&] { c->save_code_now("https://blocked.example/r", VisitType::git); }), ErrorKind::Rejected);
}

TEST(Heritage, FileUrlHeuristic)
{
    EXPECT_TRUE(looks_like_file_url("https://ftp.gnu.org/gnu/sed/sed-4.8.tar.gz"));
    EXPECT_TRUE(looks_like_file_url("https://example.org/fix.patch"));
    EXPECT_FALSE(looks_like_file_url("https://github.com/scikit-learn/scikit-learn"));
    EXPECT_FALSE(looks_like_file_url("https://example.org/repo.git"));
}

TEST(Heritage, RetriesWithBackoff)
{
    Client c;
    Sha1Digest commit{};
    auto path = c.api(expand_path(endpoints::revision, {{"sha1", to_hex(commit)}}));
    c.t.on("GET", path, status(503));
    c.t.on("GET", path, status(429));
    c.t.on("GET", path, json_response(200, json{{"id", to_hex(commit)}, {"directory", std::string(40, '1')}}.dump()));
    auto start = c.clock.now();
    c->lookup_revision(commit);
    EXPECT_EQ(c.t.count(), 3u);
    EXPECT_EQ(c.clock.now() - start, std::chrono::seconds(3));
}

TEST(Heritage, RateLimitedAfterRetries)
{
    Client c;
    c.t.on("GET", c.api("/api/1/revision/*"), status(429));
    EXPECT_EQ(kind_of([&] { c->lookup_revision(Sha1Digest{}); }), ErrorKind::RateLimited);
    EXPECT_EQ(c.t.count(), 3u);
    Client d;
    d.t.on("GET", d.api("/api/1/revision/*"), status(502));
    EXPECT_EQ(kind_of([&] { d->lookup_revision(Sha1Digest{}); }), ErrorKind::TransportError);
}

TEST(Heritage, NonIdempotentCallsAreNotRetried)
{
    Client c;
    auto dir = dir_id(6);
    auto path = c.api(expand_path(endpoints::vault_flat, {{"swhid", dir.to_string()}}));
    c.t.on("GET", path, status(404));
    c.t.on("POST", path, status(503));
    EXPECT_EQ(kind_of([&] { c->vault_request(dir); }), ErrorKind::TransportError);
    EXPECT_EQ(c.t.count("POST", path), 1u);
}

TEST(Heritage, AuthenticationErrors)
{
    Client c("secret");
    c.t.on("GET", c.api("/api/1/revision/*"), status(401));
    EXPECT_EQ(kind_of([&] { c->lookup_revision(Sha1Digest{}); }), ErrorKind::AuthRequired);
    EXPECT_EQ(c.t.count(), 1u);
}

TEST(Heritage, TokenStaysOnTheApiOrigin)
{
    Client c("secret");
    NarNode tree = NarNode::directory();
    tree.set("f", NarNode::regular(to_bytes("z")));
    auto dir = swhid_for_directory(tree);
    revive::testing::serve_vault(c.t, dir, revive::testing::vault_bundle(tree));
    c->vault_fetch(dir, std::chrono::seconds(1), std::chrono::seconds(60));
    for (const auto& r : c.t.requests()) {
        bool has_auth = false;
        for (const auto& [k, v] : r.headers)
            if (k == "Authorization") {
                has_auth = true;
                EXPECT_EQ(v, "Bearer secret");
            }
        EXPECT_EQ(has_auth, r.url.rfind(kArchive, 0) == 0) << r.url;
    }
}

TEST(Heritage, RateBudgets)
{
    ArchiveEndpoint anon;
    EXPECT_EQ(anon.effective_budget(), 120u);
    ArchiveEndpoint auth;
    auth.auth_token = "t";
    EXPECT_EQ(auth.effective_budget(), 1200u);
    auth.rate_budget = 5;
    EXPECT_EQ(auth.effective_budget(), 5u);

    ManualClock clock;
    RateLimiter limiter(3, std::chrono::minutes(1), clock);
    auto start = clock.now();
    for (int i = 0; i < 3; ++i) limiter.acquire();
    EXPECT_EQ(clock.now(), start);
    limiter.acquire();
    EXPECT_EQ(clock.now() - start, std::chrono::minutes(1));
    for (int i = 0; i < 2; ++i) limiter.acquire();
    limiter.acquire();
    EXPECT_EQ(clock.now() - start, std::chrono::minutes(2));
}

TEST(Heritage, ClientHonoursBudget)
{
    Client c;
    c.ep.rate_budget = 2;
    c.ep.rate_window = std::chrono::seconds(100);
    ArchiveClient limited(c.ep, c.t, c.clock);
    c.t.on("GET", c.api("/api/1/revision/*"), status(404));
    auto start = c.clock.now();
    for (int i = 0; i < 5; ++i) EXPECT_EQ(kind_of([&] { limited.lookup_revision(Sha1Digest{}); }), ErrorKind::NotFound);
    EXPECT_EQ(c.clock.now() - start, std::chrono::seconds(200));
}

TEST(Heritage, ContentDownloadIsVerified)
{
    Client c;
    auto data = to_bytes("patch body\n");
    auto id = swhid_for_content(data);
    auto path = c.api(expand_path(endpoints::content_raw, {{"sha1", to_hex(id.digest)}}));
    c.t.on("GET", path, HttpResponse{200, {}, to_string(data)});
    EXPECT_EQ(c->fetch_content(id), data);
    auto other = swhid_for_content(to_bytes("other"));
    c.t.on("GET", c.api(expand_path(endpoints::content_raw, {{"sha1", to_hex(other.digest)}})),
           HttpResponse{200, {}, "tampered"});
    EXPECT_EQ(kind_of([&] { c->fetch_content(other); }), ErrorKind::TransportError);

    auto sha = sha256(data);
    c.t.on("GET", c.api(expand_path(endpoints::content_sha256, {{"hex", to_hex(sha)}})),
           json_response(200, json{{"checksums", {{"sha1_git", to_hex(id.digest)}, {"sha256", to_hex(sha)}}}}.dump()));
    EXPECT_EQ(c->lookup_content_sha256(sha), id);
    EXPECT_FALSE(c->lookup_content_sha256(sha256(std::string_view("nope"))));
}
