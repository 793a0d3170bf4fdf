#include "revive/fetch.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "revive/error.hpp"

extern char** environ;

namespace revive {

namespace fs = std::filesystem;
using json = nlohmann::json;

NarNode Fetcher::fetch_hg(const std::string& url)
{
    fail(ErrorKind::TransportError, "hg checkouts are not supported: " + url);
}

std::string ref_key(const GitRef& ref)
{
    return ref.commit ? to_hex(*ref.commit) : ref.tag.value_or("");
}

int run_program(const std::vector<std::string>& argv)
{
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
    pid_t pid;
    int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) return 127;
    int status = 0;
    while (waitpid(pid, &status, 0) < 0)
        if (errno != EINTR) return 127;
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

TempDir::TempDir()
{
    std::string tmpl = (fs::temp_directory_path() / "revive-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

// --- SystemFetcher ----------------------------------------------------------------

Bytes SystemFetcher::fetch_file(const std::string& url)
{
    HttpRequest req;
    req.url = url;
    req.headers.emplace_back("User-Agent", "revive");
    auto r = send_following_redirects(transport_, req);
    if (r.status == 404 || r.status == 410) fail(ErrorKind::NotFound, url + ": HTTP " + std::to_string(r.status));
    if (r.status != 200) fail(ErrorKind::TransportError, url + ": HTTP " + std::to_string(r.status));
    return to_bytes(r.body);
}

NarNode SystemFetcher::fetch_git(const std::string& url, const GitRef& ref)
{
    TempDir tmp;
    auto dir = (tmp.path() / "checkout").string();
    if (run_program({"git", "clone", "--quiet", "--no-checkout", url, dir}) != 0)
        fail(ErrorKind::NotFound, "git clone " + url + " failed");
    std::string target = ref.commit ? to_hex(*ref.commit) : "refs/tags/" + ref.tag.value_or("");
    if (run_program({"git", "-C", dir, "-c", "advice.detachedHead=false", "checkout", "--quiet", target + "^{commit}"}) != 0)
        fail(ErrorKind::NotFound, url + ": no " + ref_key(ref));
    return tree_from_disk(dir, TreeFilter{true, {}});
}

NarNode SystemFetcher::fetch_svn(const std::string& url, std::uint64_t revision)
{
    TempDir tmp;
    auto dir = (tmp.path() / "export").string();
    if (run_program({"svn", "export", "--quiet", "--non-interactive", "--ignore-externals", "-r",
                     std::to_string(revision), url, dir}) != 0)
        fail(ErrorKind::NotFound, "svn export " + url + "@" + std::to_string(revision) + " failed");
    return tree_from_disk(dir, TreeFilter{true, {}});
}

// --- FixtureFetcher ---------------------------------------------------------------

void FixtureFetcher::add_file(std::string url, Bytes data)
{
    std::lock_guard lock(mutex_);
    files_[std::move(url)] = std::move(data);
}

void FixtureFetcher::add_failure(std::string url, ErrorKind kind)
{
    std::lock_guard lock(mutex_);
    failures_[std::move(url)] = kind;
}

void FixtureFetcher::add_git(std::string url, std::string ref, NarNode tree)
{
    std::lock_guard lock(mutex_);
    trees_.insert_or_assign({"git " + url, std::move(ref)}, std::move(tree));
}

void FixtureFetcher::add_svn(std::string url, std::uint64_t revision, NarNode tree)
{
    std::lock_guard lock(mutex_);
    trees_.insert_or_assign({"svn " + url, std::to_string(revision)}, std::move(tree));
}

Bytes FixtureFetcher::fetch_file(const std::string& url)
{
    ++calls_;
    std::lock_guard lock(mutex_);
    if (auto f = failures_.find(url); f != failures_.end()) fail(f->second, url);
    auto it = files_.find(url);
    if (it == files_.end()) fail(ErrorKind::NotFound, url);
    return it->second;
}

NarNode FixtureFetcher::fetch_git(const std::string& url, const GitRef& ref)
{
    ++calls_;
    std::lock_guard lock(mutex_);
    if (auto f = failures_.find(url); f != failures_.end()) fail(f->second, url);
    auto it = trees_.find({"git " + url, ref_key(ref)});
    if (it == trees_.end()) fail(ErrorKind::NotFound, url + " " + ref_key(ref));
    return it->second;
}

NarNode FixtureFetcher::fetch_svn(const std::string& url, std::uint64_t revision)
{
    ++calls_;
    std::lock_guard lock(mutex_);
    if (auto f = failures_.find(url); f != failures_.end()) fail(f->second, url);
    auto it = trees_.find({"svn " + url, std::to_string(revision)});
    if (it == trees_.end()) fail(ErrorKind::NotFound, url + "@" + std::to_string(revision));
    return it->second;
}

std::unique_ptr<FixtureFetcher> FixtureFetcher::from_json(const fs::path& file)
{
    std::ifstream in(file);
    if (!in) fail(ErrorKind::PreconditionViolation, "cannot read " + file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::PreconditionViolation, file.string() + ": " + e.what());
    }
    auto base = file.parent_path();
    auto out = std::make_unique<FixtureFetcher>();
    try {
        json files = doc.value("files", json::object()), git = doc.value("git", json::object()),
             svn = doc.value("svn", json::object());
        for (auto& [url, spec] : files.items()) {
            if (spec.contains("status")) {
                int status = spec["status"].get<int>();
                out->add_failure(url, status == 404 || status == 410 ? ErrorKind::NotFound : ErrorKind::TransportError);
            } else if (spec.contains("path")) {
                out->add_file(url, read_file((base / spec["path"].get<std::string>()).string()));
            } else if (spec.contains("hex")) {
                out->add_file(url, from_hex(spec["hex"].get<std::string>()));
            } else {
                out->add_file(url, to_bytes(spec.at("text").get<std::string>()));
            }
        }
        for (auto& [url, refs] : git.items())
            for (auto& [ref, dir] : refs.items())
                out->add_git(url, ref, tree_from_disk(base / dir.get<std::string>(), TreeFilter{true, {}}));
        for (auto& [url, revs] : svn.items())
            for (auto& [rev, dir] : revs.items())
                out->add_svn(url, std::stoull(rev), tree_from_disk(base / dir.get<std::string>(), TreeFilter{true, {}}));
    } catch (const json::exception& e) {
        fail(ErrorKind::PreconditionViolation, file.string() + ": " + e.what());
    }
    return out;
}

} // namespace revive
