#include "longqa/gateway/chat.hpp"

#include <array>
#include <cstdio>
#include <set>

#include <openssl/sha.h>

namespace longqa::gateway {

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

void ChatRequest::validate() const {
    if (messages.empty()) throw PipelineError("chat request has no messages");
    for (const auto& m : messages) {
        if (m.role == Role::system) continue;
        if (m.role != Role::user) throw PipelineError("first non-system message must come from the user");
        break;
    }
    if (temperature < 0) throw PipelineError("temperature must be non-negative");
    if (max_output_tokens <= 0) throw PipelineError("max_output_tokens must be positive");
    std::set<std::string> names;
    for (const auto& t : tools) {
        if (t.name.empty()) throw PipelineError("function schema without a name");
        if (!names.insert(t.name).second) throw PipelineError("duplicate function schema: " + t.name);
    }
    if (tool_choice && !names.count(*tool_choice)) {
        throw PipelineError("tool_choice names an unknown function: " + *tool_choice);
    }
}

nlohmann::json to_wire_json(const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    auto& messages = body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    if (!request.tools.empty()) {
        auto& tools = body["tools"] = nlohmann::json::array();
        for (const auto& t : request.tools) {
            tools.push_back({{"type", "function"},
                             {"function",
                              {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
        }
    }
    if (request.tool_choice) {
        body["tool_choice"] = {{"type", "function"}, {"function", {{"name", *request.tool_choice}}}};
    }
    return body;
}

std::string request_hash(const ChatRequest& request) {
    const std::string canonical = to_wire_json(request).dump();
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), digest.data());
    std::string hex;
    hex.reserve(2 * digest.size());
    for (const unsigned char b : digest) {
        char buf[3];
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

ChatResponse parse_wire_response(const nlohmann::json& body) {
    try {
        ChatResponse out;
        const auto& message = body.at("choices").at(0).at("message");
        if (message.contains("content") && message["content"].is_string()) {
            out.text = message["content"].get<std::string>();
        }
        if (message.contains("tool_calls") && message["tool_calls"].is_array()) {
            for (const auto& call : message["tool_calls"]) {
                const auto& fn = call.at("function");
                ToolCall tc;
                tc.name = fn.at("name").get<std::string>();
                const auto& args = fn.at("arguments");
                tc.arguments = args.is_string() ? nlohmann::json::parse(args.get<std::string>()) : args;
                out.tool_calls.push_back(std::move(tc));
            }
        }
        if (!out.text && out.tool_calls.empty()) throw ProtocolError("response has neither content nor tool_calls");
        if (body.contains("usage") && body["usage"].is_object()) {
            out.usage.input_tokens = body["usage"].value("prompt_tokens", std::size_t{0});
            out.usage.output_tokens = body["usage"].value("completion_tokens", std::size_t{0});
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed chat-completions response: ") + e.what());
    }
}

nlohmann::json to_json(const ChatResponse& response) {
    nlohmann::json j;
    if (response.text) j["text"] = *response.text;
    if (!response.tool_calls.empty()) {
        auto& calls = j["tool_calls"] = nlohmann::json::array();
        for (const auto& c : response.tool_calls) calls.push_back({{"name", c.name}, {"arguments", c.arguments}});
    }
    j["usage"] = {{"input_tokens", response.usage.input_tokens}, {"output_tokens", response.usage.output_tokens}};
    return j;
}

ChatResponse response_from_json(const nlohmann::json& j) {
    try {
        ChatResponse out;
        if (j.contains("text") && j["text"].is_string()) out.text = j["text"].get<std::string>();
        if (j.contains("tool_calls")) {
            for (const auto& c : j["tool_calls"]) {
                out.tool_calls.push_back({c.at("name").get<std::string>(), c.value("arguments", nlohmann::json::object())});
            }
        }
        if (j.contains("usage")) {
            out.usage.input_tokens = j["usage"].value("input_tokens", std::size_t{0});
            out.usage.output_tokens = j["usage"].value("output_tokens", std::size_t{0});
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed recorded response: ") + e.what());
    }
}

std::size_t estimate_input_tokens(const ChatRequest& request, const TokenScheme& scheme) {
    std::size_t total = 0;
    for (const auto& m : request.messages) total += scheme.count(m.content);
    for (const auto& t : request.tools) {
        total += scheme.count(t.name) + scheme.count(t.description) + scheme.count(t.parameters.dump());
    }
    return total;
}

std::size_t estimate_output_tokens(const ChatResponse& response, const TokenScheme& scheme) {
    std::size_t total = response.text ? scheme.count(*response.text) : 0;
    for (const auto& c : response.tool_calls) total += scheme.count(c.arguments.dump());
    return total;
}

// ---------------------------------------------------------------------------

namespace {

void validate_at(const nlohmann::json& value, const nlohmann::json& schema, const std::string& path) {
    const auto fail = [&](const std::string& why) {
        throw ValidationError("argument validation failed at '" + path + "': " + why, path);
    };
    const std::string type = schema.value("type", "");
    if (type == "object") {
        if (!value.is_object()) fail("expected an object");
        if (schema.contains("required")) {
            for (const auto& req : schema["required"]) {
                const auto key = req.get<std::string>();
                if (!value.contains(key)) {
                    const std::string field = path.empty() ? key : path + "." + key;
                    throw ValidationError("missing required field '" + field + "'", field);
                }
            }
        }
        if (schema.contains("properties")) {
            for (const auto& [key, sub] : schema["properties"].items()) {
                if (value.contains(key)) validate_at(value[key], sub, path.empty() ? key : path + "." + key);
            }
        }
    } else if (type == "array") {
        if (!value.is_array()) fail("expected an array");
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < value.size(); ++i) {
                validate_at(value[i], schema["items"], path + "[" + std::to_string(i) + "]");
            }
        }
    } else if (type == "string") {
        if (!value.is_string()) fail("expected a string");
    } else if (type == "boolean") {
        if (!value.is_boolean()) fail("expected a boolean");
    } else if (type == "integer") {
        if (!value.is_number_integer()) fail("expected an integer");
    } else if (type == "number") {
        if (!value.is_number()) fail("expected a number");
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& option : schema["enum"]) found = found || option == value;
        if (!found) fail("value not in enum");
    }
}

}  // namespace

void validate_arguments(const nlohmann::json& value, const nlohmann::json& schema) {
    validate_at(value, schema, "");
}

}  // namespace longqa::gateway
