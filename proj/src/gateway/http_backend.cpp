#include <httplib.h>

#include <cstdlib>

#include "longqa/gateway/backend.hpp"

namespace longqa::gateway {

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

httplib::Client make_client(const std::string& base, std::chrono::milliseconds timeout) {
    httplib::Client client(base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    return client;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config, TokenScheme scheme)
    : config_(std::move(config)), scheme_(std::move(scheme)) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("credential environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
    std::tie(base_, path_) = split_url(config_.endpoint);
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
    auto client = make_client(base_, config_.timeout);
    const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
    const auto result = client.Post(path_, headers, to_wire_json(request).dump(), "application/json");
    if (!result) {
        const auto err = result.error();
        // A read failure means the body went out and the reply never came.
        const bool transmitted = err == httplib::Error::Read;
        throw TransportError("HTTP request to " + config_.endpoint + " failed: " + httplib::to_string(err),
                             /*retryable=*/true, 0, transmitted);
    }
    if (result->status < 200 || result->status >= 300) {
        throw TransportError("HTTP " + std::to_string(result->status) + " from " + config_.endpoint + ": " +
                                 result->body.substr(0, 300),
                             retryable_status(result->status), result->status, /*transmitted=*/true);
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("response body is not JSON: ") + e.what());
    }
    ChatResponse response = parse_wire_response(body);
    if (!body.contains("usage")) {
        response.usage.input_tokens = estimate_input_tokens(request, scheme_);
        response.usage.output_tokens = estimate_output_tokens(response, scheme_);
    }
    return response;
}

std::string http_get(const std::string& url, std::chrono::milliseconds timeout) {
    const auto [base, path] = split_url(url);
    auto client = make_client(base, timeout);
    client.set_follow_location(true);
    const auto result = client.Get(path);
    if (!result) throw TransportError("GET " + url + " failed: " + httplib::to_string(result.error()), true);
    if (result->status < 200 || result->status >= 300) {
        throw TransportError("GET " + url + " returned HTTP " + std::to_string(result->status),
                             retryable_status(result->status), result->status, true);
    }
    return result->body;
}

}  // namespace longqa::gateway
