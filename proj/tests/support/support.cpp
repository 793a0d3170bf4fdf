#include "support.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "revive/fetch.hpp"

extern char** environ;

namespace revive::testing {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

RunResult run(const std::vector<std::string>& argv, std::string_view input, const fs::path& cwd)
{
    TempDir tmp;
    auto in_path = tmp.path() / "in", out_path = tmp.path() / "out", err_path = tmp.path() / "err";
    {
        std::ofstream f(in_path, std::ios::binary);
        f.write(input.data(), static_cast<std::streamsize>(input.size()));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 0, in_path.c_str(), O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, 1, out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, 2, err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_t pid;
    int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw std::runtime_error("cannot run " + argv[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    RunResult r;
    r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::string run_ok(const std::vector<std::string>& argv, std::string_view input, const fs::path& cwd)
{
    auto r = run(argv, input, cwd);
    if (r.status != 0) {
        std::string cmd;
        for (const auto& a : argv) cmd += a + " ";
        ADD_FAILURE() << cmd << "exited " << r.status << ": " << r.err;
    }
    return r.out;
}

fs::path source_dir()
{
    return REVIVE_SOURCE_DIR;
}

fs::path oracle_script(const std::string& name)
{
    return source_dir() / "tests" / "oracles" / name;
}

std::string git_blob_hex(ByteView data)
{
    auto out = run_ok({"git", "hash-object", "--stdin"}, to_string(data));
    return out.substr(0, 40);
}

std::string git_tree_hex(const fs::path& dir)
{
    TempDir git_dir;
    auto gd = "--git-dir=" + (git_dir.path() / "g").string();
    auto wt = "--work-tree=" + dir.string();
    run_ok({"git", gd, "init", "-q"});
    run_ok({"git", gd, wt, "-c", "core.filemode=true", "-c", "core.symlinks=true", "add", "-A", "-f", "."}, {}, dir);
    return run_ok({"git", gd, "write-tree"}).substr(0, 40);
}

NarOracle nar_oracle(const fs::path& path, bool exclude_vcs)
{
    std::vector<std::string> argv{"python3", oracle_script("nar_oracle.py").string(), path.string()};
    if (exclude_vcs) argv.push_back("--exclude-vcs");
    std::istringstream s(run_ok(argv));
    NarOracle o;
    s >> o.hex >> o.base32;
    return o;
}

std::string random_name(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len)
{
    static const std::string chars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-+";
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, chars.size() - 1);
    std::string s;
    auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += chars[pick(rng)];
    if (s == "." || s == ".." || s == ".git" || s == ".svn" || s == ".hg") s += "x";
    return s;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n, bool compressible)
{
    Bytes b(n);
    if (compressible) {
        static const char* words[] = {"alpha ", "beta ", "gamma\n", "delta ", "0123 ", "{\n", "}\n", "return x;\n"};
        std::uniform_int_distribution<int> w(0, 7);
        std::size_t i = 0;
        while (i < n) {
            const char* s = words[w(rng)];
            for (; *s && i < n; ++s) b[i++] = static_cast<std::uint8_t>(*s);
        }
    } else {
        for (auto& c : b) c = static_cast<std::uint8_t>(rng());
    }
    return b;
}

namespace {

bool has_file(const NarNode& n)
{
    if (!n.is_directory()) return true;
    for (const auto& [_, c] : n.entries())
        if (has_file(c)) return true;
    return false;
}

} // namespace

NarNode random_tree(std::mt19937_64& rng, int max_depth, int max_entries, bool allow_empty_dirs)
{
    NarNode dir = NarNode::directory();
    std::uniform_int_distribution<int> count(0, max_entries);
    std::uniform_int_distribution<int> kind(0, 9);
    std::uniform_int_distribution<std::size_t> size(0, 3000);
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
        auto name = random_name(rng, 1, 24);
        int k = kind(rng);
        if (k < 6 || max_depth == 0) {
            dir.set(name, NarNode::regular(random_bytes(rng, size(rng), k % 2 == 0), k == 5));
        } else if (k < 8) {
            dir.set(name, NarNode::symlink(random_name(rng, 1, 30)));
        } else {
            dir.set(name, random_tree(rng, max_depth - 1, max_entries, allow_empty_dirs));
        }
    }
    if (!allow_empty_dirs && !has_file(dir)) dir.set("f", NarNode::regular(to_bytes("x\n")));
    return dir;
}

Bytes vault_bundle(const NarNode& tree, const std::string& top)
{
    TempDir tmp;
    tree_to_disk(tree, tmp.path() / top);
    auto out = tmp.path() / "bundle.tar.gz";
    run_ok({"tar", "-czf", out.string(), "-C", tmp.path().string(), top});
    return read_file(out.string());
}

void serve_vault(ScriptedTransport& t, const Swhid& dir, const Bytes& bundle)
{
    auto path = kArchive + "/api/1/vault/flat/" + dir.to_string() + "/";
    auto fetch = path + "raw/";
    auto done = json_response(200, R"({"status":"done","fetch_url":")" + fetch + R"(","id":1})");
    t.on("GET", path, done);
    t.on("POST", path, done);
    HttpResponse redirect;
    redirect.status = 302;
    redirect.headers.emplace_back("Location", "https://objects.example/bundles/" + to_hex(dir.digest));
    t.on("GET", fetch, redirect);
    HttpResponse body;
    body.status = 200;
    body.body = to_string(bundle);
    t.on("GET", "https://objects.example/bundles/" + to_hex(dir.digest), body);
}

} // namespace revive::testing
