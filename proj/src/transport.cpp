#include "revive/transport.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "revive/error.hpp"

namespace revive {

namespace {

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

} // namespace

std::optional<std::string> HttpResponse::header(std::string_view name) const
{
    for (const auto& [k, v] : headers)
        if (iequals(k, name)) return v;
    return std::nullopt;
}

std::pair<std::string, std::string> split_url(std::string_view url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw std::invalid_argument("not an absolute URL: " + std::string(url));
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

std::string resolve_location(std::string_view base, std::string_view location)
{
    auto colon = location.find("://");
    if (colon != std::string_view::npos && colon > 0 &&
        location.substr(0, colon).find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789+.-") ==
            std::string_view::npos)
        return std::string(location);
    auto [origin, path] = split_url(base);
    if (!location.empty() && location.front() == '/') return origin + std::string(location);
    auto q = path.find('?');
    if (q != std::string::npos) path.resize(q);
    path.resize(path.rfind('/') + 1);
    return origin + path + std::string(location);
}

std::string url_encode(std::string_view s)
{
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

HttpResponse json_response(int status, std::string body)
{
    return HttpResponse{status, {{"Content-Type", "application/json"}}, std::move(body)};
}

HttpResponse send_following_redirects(Transport& transport, HttpRequest request, int max_redirects)
{
    for (int hop = 0;; ++hop) {
        HttpResponse r = transport.send(request);
        bool redirect = r.status == 301 || r.status == 302 || r.status == 303 || r.status == 307 || r.status == 308;
        auto location = r.header("Location");
        if (!redirect || !location) return r;
        if (hop == max_redirects) fail(ErrorKind::TransportError, "too many redirects from " + request.url);
        request.url = resolve_location(request.url, *location);
        if (r.status == 303 || ((r.status == 301 || r.status == 302) && request.method == "POST")) {
            request.method = "GET";
            request.body.clear();
        }
    }
}

// --- HttpTransport ----------------------------------------------------------------

HttpTransport::HttpTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttpTransport::send(const HttpRequest& request)
{
    std::pair<std::string, std::string> parts;
    try {
        parts = split_url(request.url);
    } catch (const std::invalid_argument& e) {
        fail(ErrorKind::TransportError, e.what());
    }
    httplib::Client client(parts.first);
    client.set_follow_location(false);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    std::string content_type = "application/octet-stream";
    for (const auto& [k, v] : request.headers) {
        if (iequals(k, "Content-Type")) content_type = v;
        else headers.emplace(k, v);
    }
    httplib::Result res = [&] {
        if (request.method == "GET") return client.Get(parts.second, headers);
        if (request.method == "POST") return client.Post(parts.second, headers, request.body, content_type);
        if (request.method == "HEAD") return client.Head(parts.second, headers);
        fail(ErrorKind::TransportError, "unsupported method " + request.method);
    }();
    if (!res) fail(ErrorKind::TransportError, request.url + ": " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) out.headers.emplace_back(k, v);
    return out;
}

HttpResponse RefusingTransport::send(const HttpRequest& request)
{
    fail(ErrorKind::TransportError, "offline mode: refusing " + request.method + " " + request.url);
}

// --- ScriptedTransport ------------------------------------------------------------

ScriptedTransport& ScriptedTransport::on(std::string method, std::string url, HttpResponse response)
{
    return on(std::move(method), std::move(url), Handler([response](const HttpRequest&) { return response; }));
}

ScriptedTransport& ScriptedTransport::on(std::string method, std::string url, Handler handler)
{
    std::lock_guard lock(mutex_);
    for (auto& r : routes_)
        if (r.method == method && r.url == url) {
            r.handlers.push_back(std::move(handler));
            return *this;
        }
    routes_.push_back({std::move(method), std::move(url), {std::move(handler)}, 0});
    return *this;
}

HttpResponse ScriptedTransport::send(const HttpRequest& request)
{
    Handler handler;
    {
        std::lock_guard lock(mutex_);
        log_.push_back(request);
        Route* best = nullptr;
        for (auto& r : routes_) {
            if (r.method != request.method) continue;
            bool match = false;
            if (!r.url.empty() && r.url.back() == '*')
                match = request.url.compare(0, r.url.size() - 1, r.url, 0, r.url.size() - 1) == 0;
            else
                match = r.url == request.url;
            if (!match) continue;
            // Exact routes win over prefixes; longer prefixes win over shorter.
            if (!best || (best->url.back() == '*' && (r.url.back() != '*' || r.url.size() > best->url.size())))
                best = &r;
        }
        if (!best) return HttpResponse{404, {}, "no scripted response"};
        handler = best->handlers[std::min(best->served, best->handlers.size() - 1)];
        ++best->served;
    }
    return handler(request);
}

std::vector<HttpRequest> ScriptedTransport::requests() const
{
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t ScriptedTransport::count() const
{
    std::lock_guard lock(mutex_);
    return log_.size();
}

std::size_t ScriptedTransport::count(std::string_view method, std::string_view url_prefix) const
{
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(), [&](const HttpRequest& r) {
        return r.method == method && std::string_view(r.url).substr(0, url_prefix.size()) == url_prefix;
    }));
}

} // namespace revive
