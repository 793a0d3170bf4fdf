#pragma once

#include <memory>
#include <string>

#include "revive/heritage.hpp"
#include "revive/swhid.hpp"
#include "revive/transport.hpp"

namespace revive::testing {

/// tar.gz of `tree` under `top`, written by a minimal ustar writer of its
/// own.
Bytes quick_bundle(const NarNode& tree, const std::string& top = "bundle");

/// Scripted stand-in for the archive API.
class MockArchive {
public:
    explicit MockArchive(std::optional<std::string> token = std::nullopt);

    ScriptedTransport& transport() { return transport_; }
    ManualClock& clock() { return clock_; }
    ArchiveClient& client() { return *client_; }

    void extid(const NarDigest& digest, const Swhid& dir);
    void revision(const Sha1Digest& commit, const Swhid& dir);
    /// `via_release` adds an annotated-tag (release) hop.
    void tag(const std::string& origin, const std::string& name, const Sha1Digest& commit, bool via_release);
    /// Cooks to `served`; `pending_polls` status answers before "done";
    /// the download goes through a 302.
    void vault(const Swhid& dir, const NarNode& served, int pending_polls = 0);
    void known(const std::vector<Swhid>& archived);
    void content(const Bytes& data);

    std::size_t calls() const { return transport_.count(); }

private:
    ScriptedTransport transport_;
    ManualClock clock_;
    std::unique_ptr<ArchiveClient> client_;
    std::vector<std::string> known_;
};

} // namespace revive::testing
