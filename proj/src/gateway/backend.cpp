#include "longqa/gateway/backend.hpp"

#include <fstream>

namespace longqa::gateway {

namespace {

void fill_usage(ChatResponse& response, const ChatRequest& request, const TokenScheme& scheme) {
    if (response.usage.input_tokens == 0 && response.usage.output_tokens == 0) {
        response.usage.input_tokens = estimate_input_tokens(request, scheme);
        response.usage.output_tokens = estimate_output_tokens(response, scheme);
    }
}

}  // namespace

CallbackBackend::CallbackBackend(Handler handler, TokenScheme scheme)
    : handler_(std::move(handler)), scheme_(std::move(scheme)) {}

ChatResponse CallbackBackend::complete(const ChatRequest& request) {
    ChatResponse response = handler_(request);
    fill_usage(response, request, scheme_);
    return response;
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::istream& transcript, TokenScheme scheme, std::string origin)
    : scheme_(std::move(scheme)), origin_(std::move(origin)) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(transcript, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = origin_ + ":" + std::to_string(line_no);
        nlohmann::json entry;
        try {
            entry = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(where + ": invalid JSON in transcript: " + e.what());
        }
        if (!entry.contains("request_hash") || !entry.contains("response")) {
            throw ConfigError(where + ": transcript line needs request_hash and response");
        }
        const auto hash = entry["request_hash"].get<std::string>();
        auto response = response_from_json(entry["response"]);
        const auto [it, inserted] = entries_.emplace(hash, response);
        if (!inserted && !(it->second == response)) {
            throw ConfigError(where + ": conflicting responses recorded for " + hash);
        }
    }
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path, TokenScheme scheme) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open transcript: " + path.string());
    return std::make_shared<ScriptedBackend>(in, std::move(scheme), path.string());
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    const auto hash = request_hash(request);
    const auto it = entries_.find(hash);
    if (it == entries_.end()) {
        std::string hint;
        for (auto m = request.messages.rbegin(); m != request.messages.rend(); ++m) {
            if (m->role == Role::user) {
                hint = m->content.substr(0, 120);
                break;
            }
        }
        throw FixtureMissError("no scripted response for request " + hash + " in " + origin_ +
                               " (last user message: \"" + hint + "\")");
    }
    ChatResponse response = it->second;
    fill_usage(response, request, scheme_);
    return response;
}

// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
    ChatResponse response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    exchanges_.emplace(request_hash(request), std::make_pair(to_wire_json(request), response));
    return response;
}

void RecordingBackend::write_transcript(std::ostream& out) const {
    std::lock_guard lock(mutex_);
    for (const auto& [hash, exchange] : exchanges_) {
        nlohmann::json line = {{"request_hash", hash}, {"request", exchange.first}, {"response", to_json(exchange.second)}};
        out << line.dump() << '\n';
    }
}

std::size_t RecordingBackend::size() const {
    std::lock_guard lock(mutex_);
    return exchanges_.size();
}

}  // namespace longqa::gateway
