#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "revive/bytes.hpp"
#include "revive/nar.hpp"
#include "revive/swhid.hpp"
#include "revive/transport.hpp"

namespace revive::testing {

struct RunResult {
    int status = -1;
    std::string out;
    std::string err;
};

/// Runs argv (no shell) with `input` on stdin.
RunResult run(const std::vector<std::string>& argv, std::string_view input = {},
              const std::filesystem::path& cwd = {});

/// Like run() but fails the calling test on a non-zero status.
std::string run_ok(const std::vector<std::string>& argv, std::string_view input = {},
                   const std::filesystem::path& cwd = {});

std::filesystem::path source_dir();
std::filesystem::path oracle_script(const std::string& name);

/// Git object hashes through the git command-line tool.
std::string git_blob_hex(ByteView data);
std::string git_tree_hex(const std::filesystem::path& dir);

struct NarOracle {
    std::string hex;
    std::string base32;
};
NarOracle nar_oracle(const std::filesystem::path& path, bool exclude_vcs = false);

/// Random file tree; `allow_empty_dirs` controls whether directories may end
/// up with no files below them.
NarNode random_tree(std::mt19937_64& rng, int max_depth, int max_entries, bool allow_empty_dirs);

std::string random_name(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len);
Bytes random_bytes(std::mt19937_64& rng, std::size_t n, bool compressible);

/// A Vault "flat" bundle: tar.gz (system tar and gzip) of `tree` under a
/// single top-level directory.
Bytes vault_bundle(const NarNode& tree, const std::string& top = "bundle");

inline const std::string kArchive = "https://archive.example";

/// Routes a Vault cooking of `dir` that is done at once and whose download
/// goes through one redirect.
void serve_vault(ScriptedTransport& t, const Swhid& dir, const Bytes& bundle);

} // namespace revive::testing
