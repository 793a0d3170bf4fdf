#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "revive/error.hpp"
#include "revive/nar.hpp"
#include "revive/source.hpp"
#include "revive/transport.hpp"

namespace revive {

/// Upstream download interface. Every method throws Error(NotFound) when
/// the origin has nothing at that address and Error(TransportError) for
/// anything else. Implementations must be safe to call concurrently.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual Bytes fetch_file(const std::string& url) = 0;
    /// Checkout without VCS metadata.
    virtual NarNode fetch_git(const std::string& url, const GitRef& ref) = 0;
    virtual NarNode fetch_svn(const std::string& url, std::uint64_t revision) = 0;
    virtual NarNode fetch_hg(const std::string& url);
};

/// Commit hex or tag name.
std::string ref_key(const GitRef& ref);

/// HTTP(S) downloads over a Transport (redirects followed, at most 10);
/// git and svn through the installed command-line clients.
class SystemFetcher : public Fetcher {
public:
    explicit SystemFetcher(Transport& transport) : transport_(transport) {}
    Bytes fetch_file(const std::string& url) override;
    NarNode fetch_git(const std::string& url, const GitRef& ref) override;
    NarNode fetch_svn(const std::string& url, std::uint64_t revision) override;

private:
    Transport& transport_;
};

/// Serves canned files and trees.
class FixtureFetcher : public Fetcher {
public:
    void add_file(std::string url, Bytes data);
    /// Every fetch of `url` fails with `kind`.
    void add_failure(std::string url, ErrorKind kind);
    void add_git(std::string url, std::string ref, NarNode tree);
    void add_svn(std::string url, std::uint64_t revision, NarNode tree);

    Bytes fetch_file(const std::string& url) override;
    NarNode fetch_git(const std::string& url, const GitRef& ref) override;
    NarNode fetch_svn(const std::string& url, std::uint64_t revision) override;

    std::size_t calls() const { return calls_; }

    /// Loads a fixture description:
    /// `{"files": {URL: {"path"|"text"|"hex": ..} | {"status": 404}},
    ///   "git": {URL: {REF: DIR}}, "svn": {URL: {REV: DIR}}}`
    /// with paths relative to the directory holding `file`.
    static std::unique_ptr<FixtureFetcher> from_json(const std::filesystem::path& file);

private:
    std::mutex mutex_;
    std::map<std::string, Bytes> files_;
    std::map<std::string, ErrorKind> failures_;
    std::map<std::pair<std::string, std::string>, NarNode> trees_;
    std::atomic<std::size_t> calls_{0};
};

/// Runs a program (no shell) and returns its exit status; output is
/// discarded.
int run_program(const std::vector<std::string>& argv);

/// Temporary directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace revive
