#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "revive/audit.hpp"
#include "revive/disarchive.hpp"
#include "revive/encoding.hpp"
#include "revive/error.hpp"
#include "revive/fetch.hpp"
#include "revive/heritage.hpp"
#include "revive/resolver.hpp"
#include "revive/source.hpp"
#include "revive/swhid.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace revive;

namespace {

struct Config {
    std::string swh_url = "https://archive.softwareheritage.org";
    std::string swh_token;
    std::string db_url;
    int timeout = 60;
    std::size_t parallelism = 8;
    double poll_interval = 10;
    double vault_deadline = 3600;
    std::string offline_mocks;
    bool offline = false;
    bool json_output = false;
};

std::string env(const char* name)
{
    const char* v = std::getenv(name);
    return v ? v : "";
}

fs::path default_config_path()
{
    auto xdg = env("XDG_CONFIG_HOME");
    if (!xdg.empty()) return fs::path(xdg) / "revive" / "config.json";
    auto home = env("HOME");
    return home.empty() ? fs::path() : fs::path(home) / ".config" / "revive" / "config.json";
}

/// Config file values, then environment, for anything not set by a flag.
void apply_defaults(Config& c, const std::string& config_file, const std::set<std::string>& from_flags)
{
    fs::path path = config_file.empty() ? default_config_path() : fs::path(config_file);
    json file = json::object();
    if (!path.empty() && fs::exists(path)) {
        std::ifstream in(path);
        try {
            file = json::parse(in);
        } catch (const json::exception& e) {
            fail(ErrorKind::PreconditionViolation, "config " + path.string() + ": " + e.what());
        }
    } else if (!config_file.empty()) {
        fail(ErrorKind::PreconditionViolation, "cannot read config " + config_file);
    }
    auto pick = [&](const char* flag, std::string& field, const char* var, const char* key) {
        if (from_flags.count(flag)) return;
        if (auto e = env(var); !e.empty()) field = e;
        else if (file.contains(key) && file[key].is_string()) field = file[key].get<std::string>();
    };
    pick("--swh-url", c.swh_url, "REVIVE_SWH_URL", "swh_url");
    pick("--swh-token", c.swh_token, "REVIVE_SWH_TOKEN", "swh_token");
    pick("--db", c.db_url, "REVIVE_DB_URL", "db_url");
    if (!from_flags.count("--timeout") && file.contains("timeout")) c.timeout = file["timeout"].get<int>();
    if (!from_flags.count("--parallelism") && file.contains("parallelism"))
        c.parallelism = file["parallelism"].get<std::size_t>();
}

HttpResponse mock_response(const json& route, const fs::path& base)
{
    HttpResponse r;
    r.status = route.value("status", 200);
    if (route.contains("headers"))
        for (auto& [k, v] : route["headers"].items()) r.headers.emplace_back(k, v.get<std::string>());
    if (route.contains("json")) {
        r.body = route["json"].dump();
        r.headers.emplace_back("Content-Type", "application/json");
    } else if (route.contains("body_file")) {
        r.body = to_string(read_file((base / route["body_file"].get<std::string>()).string()));
    } else if (route.contains("body")) {
        r.body = route["body"].get<std::string>();
    }
    return r;
}

/// Everything a subcommand may need, built on first use.
class Context {
public:
    explicit Context(Config c) : config_(std::move(c)) {}

    const Config& config() const { return config_; }

    Transport& transport()
    {
        if (transport_) return *transport_;
        if (!config_.offline_mocks.empty()) {
            auto scripted = std::make_unique<ScriptedTransport>();
            fs::path file = fs::path(config_.offline_mocks) / "swh.json";
            if (fs::exists(file)) {
                std::ifstream in(file);
                json doc;
                try {
                    doc = json::parse(in);
                    std::string base = config_.swh_url;
                    while (!base.empty() && base.back() == '/') base.pop_back();
                    for (const auto& route : doc.at("routes")) {
                        std::string url = route.at("url").get<std::string>();
                        if (url.find("://") == std::string::npos) url = base + url;
                        std::vector<HttpResponse> responses;
                        if (route.contains("responses"))
                            for (const auto& r : route["responses"]) responses.push_back(mock_response(r, file.parent_path()));
                        else
                            responses.push_back(mock_response(route, file.parent_path()));
                        for (auto& r : responses) scripted->on(route.value("method", "GET"), url, std::move(r));
                    }
                } catch (const json::exception& e) {
                    fail(ErrorKind::PreconditionViolation, file.string() + ": " + e.what());
                }
            }
            transport_ = std::move(scripted);
        } else if (config_.offline) {
            transport_ = std::make_unique<RefusingTransport>();
        } else {
            transport_ = std::make_unique<HttpTransport>(std::chrono::seconds(config_.timeout));
        }
        return *transport_;
    }

    Clock& clock()
    {
        if (!clock_) {
            if (config_.offline_mocks.empty()) clock_ = std::make_unique<SystemClock>();
            else clock_ = std::make_unique<ManualClock>();
        }
        return *clock_;
    }

    ArchiveClient& client()
    {
        if (!client_) {
            ArchiveEndpoint ep;
            ep.base_url = config_.swh_url;
            if (!config_.swh_token.empty()) ep.auth_token = config_.swh_token;
            client_ = std::make_unique<ArchiveClient>(ep, transport(), clock());
        }
        return *client_;
    }

    Fetcher& fetcher()
    {
        if (!fetcher_) {
            fs::path file = fs::path(config_.offline_mocks) / "fetch.json";
            if (!config_.offline_mocks.empty())
                fetcher_ = fs::exists(file) ? FixtureFetcher::from_json(file) : std::make_unique<FixtureFetcher>();
            else
                fetcher_ = std::make_unique<SystemFetcher>(transport());
        }
        return *fetcher_;
    }

    DescriptionDb* db()
    {
        if (db_) return db_.get();
        std::string url = config_.db_url;
        if (url.empty() && !config_.offline_mocks.empty() && fs::is_directory(fs::path(config_.offline_mocks) / "db"))
            url = (fs::path(config_.offline_mocks) / "db").string();
        if (url.empty()) return nullptr;
        if (url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0)
            db_ = std::make_unique<RemoteDescriptionDb>(url, transport());
        else
            db_ = std::make_unique<LocalDescriptionDb>(url);
        return db_.get();
    }

    ResolverOptions resolver_options() const
    {
        ResolverOptions o;
        o.poll_interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config_.poll_interval));
        o.vault_deadline = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config_.vault_deadline));
        return o;
    }

private:
    Config config_;
    std::unique_ptr<Transport> transport_;
    std::unique_ptr<Clock> clock_;
    std::unique_ptr<ArchiveClient> client_;
    std::unique_ptr<Fetcher> fetcher_;
    std::unique_ptr<DescriptionDb> db_;
};

void write_output(const std::string& path, std::string_view data)
{
    if (path.empty() || path == "-") {
        std::cout << data;
        return;
    }
    write_file(path, as_bytes(data));
}

json leaf_json(const ContentLeaf& leaf)
{
    json j;
    std::visit(
        [&](const auto& l) {
            j["name"] = l.name;
            j["addresses"] = json::array();
            for (const auto& a : l.addresses) j["addresses"].push_back(a.to_string());
        },
        leaf);
    if (auto* d = std::get_if<DirectoryRef>(&leaf)) {
        j["type"] = "directory";
        j["nar_sha256"] = d->digest.hex();
    } else {
        j["type"] = "content";
        j["sha256"] = to_hex(std::get<ContentRef>(leaf).digest);
    }
    return j;
}

std::string file_name_of(const std::string& url)
{
    auto end = url.find_first_of("?#");
    auto u = url.substr(0, end);
    while (!u.empty() && u.back() == '/') u.pop_back();
    auto slash = u.rfind('/');
    auto name = slash == std::string::npos ? u : u.substr(slash + 1);
    return name.empty() ? "source" : name;
}

// --- subcommands ------------------------------------------------------------------

int cmd_disassemble(Context& ctx, const std::string& file, const std::string& out, const std::string& content_out)
{
    auto d = disassemble_file(file);
    auto text = write_description(d.description);
    if (!content_out.empty()) write_content(d, content_out);
    if (ctx.config().json_output) {
        if (!out.empty()) write_output(out, text);
        json j;
        j["name"] = d.description.name();
        j["sha256"] = to_hex(d.description.digest());
        j["leaf"] = leaf_json(d.description.leaf);
        if (!out.empty()) j["description"] = out;
        else j["description_text"] = text;
        std::cout << j.dump(2) << "\n";
    } else {
        write_output(out, text);
    }
    return 0;
}

int cmd_assemble(Context& ctx, const std::string& desc_arg, const std::string& out, const std::string& content_dir,
                 bool use_swh)
{
    Description desc;
    if (fs::exists(desc_arg)) {
        auto data = read_file(desc_arg);
        desc = read_description(to_string(data));
    } else if (desc_arg.size() == 64 && is_hex(desc_arg)) {
        auto* db = ctx.db();
        if (!db) fail(ErrorKind::PreconditionViolation, "no description database configured (--db)");
        desc = description_db_lookup(digest_from_hex<32>(desc_arg), *db);
    } else {
        fail(ErrorKind::PreconditionViolation, "no such description: " + desc_arg);
    }
    std::unique_ptr<ContentProvider> provider;
    if (use_swh) {
        auto o = ctx.resolver_options();
        provider = std::make_unique<VaultContentProvider>(ctx.client(), o.poll_interval, o.vault_deadline);
    } else {
        provider = std::make_unique<LocalContentProvider>(content_dir);
    }
    Bytes data = assemble(desc, *provider);
    std::string path = out.empty() ? desc.name() : out;
    write_file(path, data);
    if (ctx.config().json_output) std::cout << json{{"output", path}, {"sha256", to_hex(sha256(data))}}.dump(2) << "\n";
    else std::cout << path << "\n";
    return 0;
}

int cmd_nar_hash(Context& ctx, const std::string& path, bool exclude_vcs)
{
    auto tree = tree_from_disk(path, TreeFilter{exclude_vcs, {}});
    auto d = nar_hash(tree);
    auto b32 = nix_base32_encode(ByteView(d.bytes.data(), d.bytes.size()));
    if (ctx.config().json_output)
        std::cout << json{{"base32", b32}, {"hex", d.hex()}, {"sri", sri_sha256(d.bytes)}}.dump(2) << "\n";
    else
        std::cout << b32 << " " << d.hex() << "\n";
    return 0;
}

int cmd_swhid(Context& ctx, const std::string& path, bool exclude_vcs)
{
    auto id = swhid_for_path(path, TreeFilter{exclude_vcs, {}});
    if (ctx.config().json_output) std::cout << json{{"swhid", id.to_string()}}.dump(2) << "\n";
    else std::cout << id.to_string() << "\n";
    return 0;
}

const SourceRecord& select_source(const SourcesManifest& m, const std::string& which)
{
    bool numeric = !which.empty() && std::all_of(which.begin(), which.end(), ::isdigit);
    if (numeric) {
        auto i = std::stoull(which);
        if (i >= m.sources.size()) fail(ErrorKind::PreconditionViolation, "source index " + which + " out of range");
        return m.sources[i];
    }
    for (const auto& s : m.sources)
        if (std::find(s.urls.begin(), s.urls.end(), which) != s.urls.end() || s.package == which) return s;
    fail(ErrorKind::PreconditionViolation, "no source matching " + which);
}

int cmd_resolve(Context& ctx, const std::string& manifest, const std::string& which, const std::string& out)
{
    auto m = load_sources_manifest(manifest);
    const auto& record = select_source(m, which);
    Resolution res;
    try {
        res = resolve(record, &ctx.client(), ctx.db(), ctx.fetcher(), ctx.resolver_options());
    } catch (const ResolutionFailure& f) {
        if (ctx.config().json_output) {
            json trail = json::array();
            for (const auto& a : f.trail())
                trail.push_back({{"rung", to_string(a.rung)}, {"subject", a.subject}, {"error", to_string(a.kind)},
                                 {"message", a.message}});
            std::cout << json{{"error", to_string(f.kind())}, {"trail", trail}}.dump(2) << "\n";
        }
        throw;
    }
    std::string path = out.empty() ? (record.package.empty() ? file_name_of(record.urls[0]) : record.package) : out;
    if (res.file) {
        write_file(path, *res.file);
    } else {
        if (fs::exists(path)) fail(ErrorKind::PreconditionViolation, path + " already exists");
        tree_to_disk(*res.tree, path);
    }
    if (ctx.config().json_output) {
        json trail = json::array();
        for (const auto& a : res.trail)
            trail.push_back({{"rung", to_string(a.rung)}, {"subject", a.subject}, {"error", to_string(a.kind)}});
        std::cout << json{{"provenance", to_string(res.provenance)}, {"output", path}, {"trail", trail}}.dump(2) << "\n";
    } else {
        for (const auto& a : res.trail)
            std::cerr << "note: " << to_string(a.rung) << " " << a.subject << ": " << a.message << "\n";
        std::cout << to_string(res.provenance) << "\t" << path << "\n";
    }
    return 0;
}

int cmd_lint_archival(Context& ctx, const std::string& manifest)
{
    auto m = load_sources_manifest(manifest);
    json rows = json::array();
    for (const auto& r : m.sources) {
        auto check = check_archival(r, ctx.client(), ctx.db());
        std::string swhid = check.swhid ? check.swhid->to_string() : "-";
        if (ctx.config().json_output)
            rows.push_back({{"url", r.urls[0]}, {"status", to_string(check.status)}, {"swhid", swhid}, {"note", check.note}});
        else
            std::cout << r.urls[0] << "\t" << to_string(check.status) << "\t" << swhid << "\t" << check.note << "\n";
    }
    if (ctx.config().json_output) std::cout << rows.dump(2) << "\n";
    return 0;
}

int cmd_emit_manifest(const std::vector<std::string>& inputs, const std::string& out)
{
    std::vector<SourceRecord> all;
    for (const auto& in : inputs)
        for (auto& r : load_sources_manifest(in).sources)
            if (std::find(all.begin(), all.end(), r) == all.end()) all.push_back(std::move(r));
    write_output(out, emit_sources_manifest(all));
    return 0;
}

int cmd_audit(Context& ctx, const std::string& mode, const std::vector<std::string>& manifests,
              const std::vector<std::string>& labels, const std::string& edges_file, const std::string& out)
{
    if (mode == "impact") {
        if (manifests.size() != 1) fail(ErrorKind::PreconditionViolation, "impact takes exactly one manifest");
        if (edges_file.empty()) fail(ErrorKind::PreconditionViolation, "impact needs --edges");
        auto m = load_sources_manifest(manifests[0]);
        auto edges = audit::read_edges_csv(to_string(read_file(edges_file)));
        auto ranks = audit::impact_rank(m.sources, edges);
        std::vector<std::size_t> order(ranks.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ranks[a] > ranks[b]; });
        std::string csv = "url,package,impact\n";
        for (auto i : order)
            csv += m.sources[i].urls[0] + "," + m.sources[i].package + "," + std::to_string(ranks[i]) + "\n";
        write_output(out, csv);
        return 0;
    }
    std::vector<audit::SnapshotReport> reports;
    for (std::size_t k = 0; k < manifests.size(); ++k) {
        auto m = load_sources_manifest(manifests[k]);
        std::string label = k < labels.size() ? labels[k] : !m.label.empty() ? m.label : fs::path(manifests[k]).stem().string();
        std::string date = m.date.empty() ? label : m.date;
        std::vector<audit::AuditRecord> records;
        if (mode == "census") {
            for (const auto& s : m.sources) records.push_back(audit::AuditRecord{s, label, audit::RotStatus::skipped, {}, audit::CoverageStatus::undetermined});
        } else {
            records = audit::scan(m.sources, ctx.fetcher(), label, ctx.config().parallelism);
            if (mode == "coverage") audit::coverage(records, ctx.client());
        }
        reports.push_back(audit::report(records, label, date));
    }
    if (mode == "rot") write_output(out, audit::rot_csv(reports));
    else if (mode == "coverage") write_output(out, audit::coverage_csv(reports));
    else write_output(out, audit::census_csv(reports));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rebuild and audit source archives"};
    app.require_subcommand(1);
    Config config;
    std::string config_file;
    app.add_option("--config", config_file, "Configuration file (JSON)");
    app.add_option("--swh-url", config.swh_url, "Archive base URL (env REVIVE_SWH_URL)");
    app.add_option("--swh-token", config.swh_token, "Archive API token (env REVIVE_SWH_TOKEN)");
    app.add_option("--db", config.db_url, "Description database URL or directory (env REVIVE_DB_URL)");
    app.add_option("--timeout", config.timeout, "Network timeout in seconds")->check(CLI::PositiveNumber);
    app.add_option("--parallelism", config.parallelism, "Concurrent downloads")->check(CLI::PositiveNumber);
    app.add_option("--poll-interval", config.poll_interval, "Vault poll interval in seconds")->check(CLI::PositiveNumber);
    app.add_option("--vault-deadline", config.vault_deadline, "Vault deadline in seconds")->check(CLI::PositiveNumber);
    app.add_option("--offline-mocks", config.offline_mocks, "Serve network calls from fetch.json/swh.json in DIR")
        ->check(CLI::ExistingDirectory);
    app.add_flag("--offline", config.offline, "Refuse all network access");
    app.add_flag("--json", config.json_output, "Print results as JSON");

    std::string file, out, content_out, content_dir, path, manifest, which, edges, mode;
    bool use_swh = false, exclude_vcs = false;
    std::vector<std::string> manifests, labels;

    auto* dis = app.add_subcommand("disassemble", "Describe a tarball and extract its contents");
    dis->add_option("file", file)->required()->check(CLI::ExistingFile);
    dis->add_option("-o,--output", out, "Description file (default: stdout)");
    dis->add_option("--content-out", content_out, "Write the contents under DIR");

    auto* as = app.add_subcommand("assemble", "Rebuild a tarball from its description and contents");
    as->add_option("description", file, "Description file, or sha256 to look up in --db")->required();
    as->add_option("-o,--output", out, "Output file (default: the recorded name)");
    auto* cd = as->add_option("--content-dir", content_dir, "Directory holding the contents")->check(CLI::ExistingDirectory);
    auto* sw = as->add_flag("--swh", use_swh, "Fetch the contents from the archive Vault");
    cd->excludes(sw);

    auto* nh = app.add_subcommand("nar-hash", "Print the nar sha256 of a file tree");
    nh->add_option("path", path)->required()->check(CLI::ExistingPath);
    nh->add_flag("--exclude-vcs", exclude_vcs, "Skip .git, .svn and .hg");

    auto* sh = app.add_subcommand("swhid", "Print the SWHID of a file or directory");
    sh->add_option("path", path)->required()->check(CLI::ExistingPath);
    sh->add_flag("--exclude-vcs", exclude_vcs, "Skip .git, .svn and .hg");

    auto* rs = app.add_subcommand("resolve", "Obtain verified source code, falling back to the archive");
    rs->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
    rs->add_option("--source", which, "Index, URL or package name")->required();
    rs->add_option("-o,--output", out, "Output path");

    auto* la = app.add_subcommand("lint-archival", "Report archival status, requesting Save Code Now for VCS origins");
    la->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);

    auto* em = app.add_subcommand("emit-manifest", "Write a canonical sources manifest");
    em->add_option("--manifest", manifests, "Input manifests")->required()->check(CLI::ExistingFile);
    em->add_option("-o,--output", out, "Output file (default: stdout)");

    auto* au = app.add_subcommand("audit", "Measure link rot, archive coverage, source types or impact");
    au->add_option("mode", mode)->required()->check(CLI::IsMember({"rot", "coverage", "census", "impact"}));
    au->add_option("--manifest", manifests, "Manifest per snapshot")->required()->check(CLI::ExistingFile);
    au->add_option("--snapshot-label", labels, "Label per manifest");
    au->add_option("--edges", edges, "dependent,dependency CSV for impact")->check(CLI::ExistingFile);
    au->add_option("--out", out, "CSV output (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (as->parsed() && !use_swh && content_dir.empty()) {
        std::cerr << "assemble: one of --content-dir and --swh is required\n" << as->help();
        return 2;
    }

    try {
        std::set<std::string> from_flags;
        for (const char* f : {"--swh-url", "--swh-token", "--db", "--timeout", "--parallelism"})
            if (app.count(f)) from_flags.insert(f);
        apply_defaults(config, config_file, from_flags);
        Context ctx(config);
        if (dis->parsed()) return cmd_disassemble(ctx, file, out, content_out);
        if (as->parsed()) return cmd_assemble(ctx, file, out, content_dir, use_swh);
        if (nh->parsed()) return cmd_nar_hash(ctx, path, exclude_vcs);
        if (sh->parsed()) return cmd_swhid(ctx, path, exclude_vcs);
        if (rs->parsed()) return cmd_resolve(ctx, manifest, which, out);
        if (la->parsed()) return cmd_lint_archival(ctx, manifest);
        if (em->parsed()) return cmd_emit_manifest(manifests, out);
        if (au->parsed()) return cmd_audit(ctx, mode, manifests, labels, edges, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what();
        if (e.layer()) std::cerr << " (layer " << *e.layer() << ")";
        if (e.member()) std::cerr << " (member " << *e.member() << ")";
        std::cerr << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
