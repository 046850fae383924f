#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "longqa/gateway/chat.hpp"
#include "longqa/textproc/token_scheme.hpp"

namespace longqa::gateway {

// A model endpoint. Implementations throw TransportError / ProtocolError /
// FixtureMissError; they do not retry.
class Backend {
public:
    virtual ~Backend() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Answers with a user-supplied function. Usage left at zero is filled in
// with `scheme`.
class CallbackBackend : public Backend {
public:
    using Handler = std::function<ChatResponse(const ChatRequest&)>;

    CallbackBackend(Handler handler, TokenScheme scheme);
    ChatResponse complete(const ChatRequest& request) override;

private:
    Handler handler_;
    TokenScheme scheme_;
};

// Replays responses keyed on request_hash() from a JSONL transcript of
// {"request_hash": ..., "response": {...}} lines. Misses throw
// FixtureMissError. Missing usage is computed with `scheme`.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend(std::istream& transcript, TokenScheme scheme, std::string origin = "<stream>");
    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path, TokenScheme scheme);

    ChatResponse complete(const ChatRequest& request) override;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, ChatResponse> entries_;
    TokenScheme scheme_;
    std::string origin_;
};

// Passes calls through to `inner` and keeps every successful exchange so it
// can be written out as a ScriptedBackend transcript.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(std::shared_ptr<Backend> inner);
    ChatResponse complete(const ChatRequest& request) override;

    // One line per distinct request, sorted by hash, each carrying the
    // request body for readability.
    void write_transcript(std::ostream& out) const;
    std::size_t size() const;

private:
    std::shared_ptr<Backend> inner_;
    mutable std::mutex mutex_;
    std::map<std::string, std::pair<nlohmann::json, ChatResponse>> exchanges_;
};

struct HttpBackendConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::milliseconds timeout{60'000};
};

// Chat-completions over HTTP(S). The credential is read from the configured
// environment variable at construction.
class HttpBackend : public Backend {
public:
    HttpBackend(HttpBackendConfig config, TokenScheme scheme);
    ChatResponse complete(const ChatRequest& request) override;

private:
    HttpBackendConfig config_;
    std::string api_key_;
    std::string base_;  // scheme://host[:port]
    std::string path_;
    TokenScheme scheme_;
};

// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

// Plain GET returning the body; throws TransportError on failure or non-2xx.
std::string http_get(const std::string& url, std::chrono::milliseconds timeout);

}  // namespace longqa::gateway
