#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace revive {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
    std::string method = "GET";
    std::string url;
    HeaderList headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;
    HeaderList headers;
    std::string body;

    /// Case-insensitive header lookup.
    std::optional<std::string> header(std::string_view name) const;
};

/// Sends one HTTP request; never follows redirects. Throws
/// Error(TransportError) when no response could be obtained.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

class HttpTransport : public Transport {
public:
    explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds(60));
    HttpResponse send(const HttpRequest& request) override;

private:
    std::chrono::seconds timeout_;
};

/// Refuses every request; installed in offline mode.
class RefusingTransport : public Transport {
public:
    HttpResponse send(const HttpRequest& request) override;
};

/// Answers from a table of canned responses and records every request.
/// Routes match on method and exact URL, or URL prefix when the route URL
/// ends in '*'. Later routes for the same key are served in order, the last
/// one repeating.
class ScriptedTransport : public Transport {
public:
    using Handler = std::function<HttpResponse(const HttpRequest&)>;

    ScriptedTransport& on(std::string method, std::string url, HttpResponse response);
    ScriptedTransport& on(std::string method, std::string url, Handler handler);

    HttpResponse send(const HttpRequest& request) override;

    std::vector<HttpRequest> requests() const;
    std::size_t count() const;
    std::size_t count(std::string_view method, std::string_view url_prefix) const;

private:
    struct Route {
        std::string method;
        std::string url;
        std::vector<Handler> handlers;
        std::size_t served = 0;
    };

    mutable std::mutex mutex_;
    std::vector<Route> routes_;
    std::vector<HttpRequest> log_;
};

HttpResponse json_response(int status, std::string body);

/// Percent-encodes everything outside RFC 3986 unreserved characters.
std::string url_encode(std::string_view s);

/// `scheme://host[:port]` and path (with query) of an absolute URL; throws
/// std::invalid_argument for anything else.
std::pair<std::string, std::string> split_url(std::string_view url);

/// Resolves a Location header against the URL it was received from.
std::string resolve_location(std::string_view base, std::string_view location);

/// Sends `request`, following up to `max_redirects` 3xx responses that carry
/// a Location header (303 turns the request into a GET). Throws
/// Error(TransportError) when the limit is exceeded.
HttpResponse send_following_redirects(Transport& transport, HttpRequest request, int max_redirects = 10);

} // namespace revive
