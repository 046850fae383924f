#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longqa/error.hpp"
#include "longqa/textproc/token_scheme.hpp"

namespace longqa::gateway {

inline constexpr double kDefaultTemperature = 0.0;
inline constexpr int kDefaultMaxOutputTokens = 1024;

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role) noexcept;

struct Message {
    Role role = Role::user;
    std::string content;

    bool operator==(const Message&) const = default;
};

// A callable tool. `parameters` is a JSON-schema object:
// {"type": "object", "properties": {...}, "required": [...]}.
struct FunctionSchema {
    std::string name;
    std::string description;
    nlohmann::json parameters;

    bool operator==(const FunctionSchema&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<Message> messages;
    double temperature = kDefaultTemperature;
    int max_output_tokens = kDefaultMaxOutputTokens;
    std::vector<FunctionSchema> tools;
    std::optional<std::string> tool_choice;

    // Throws PipelineError when the request breaks its invariants.
    void validate() const;
};

struct ToolCall {
    std::string name;
    nlohmann::json arguments;

    bool operator==(const ToolCall&) const = default;
};

struct Usage {
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;

    bool operator==(const Usage&) const = default;
};

struct ChatResponse {
    std::optional<std::string> text;
    std::vector<ToolCall> tool_calls;
    Usage usage;

    bool operator==(const ChatResponse&) const = default;
};

// Chat-completions request body (the wire format). nlohmann::json objects
// keep keys sorted, so dump() of this value is canonical.
nlohmann::json to_wire_json(const ChatRequest& request);

// Lowercase hex SHA-256 of the canonical wire body.
std::string request_hash(const ChatRequest& request);

// Parses a chat-completions response body. Throws ProtocolError.
ChatResponse parse_wire_response(const nlohmann::json& body);

// Transcript representation: {"text", "tool_calls": [{name, arguments}], "usage"}.
nlohmann::json to_json(const ChatResponse& response);
ChatResponse response_from_json(const nlohmann::json& j);

// Token usage computed locally, for backends that do not report it.
std::size_t estimate_input_tokens(const ChatRequest& request, const TokenScheme& scheme);
std::size_t estimate_output_tokens(const ChatResponse& response, const TokenScheme& scheme);

// --- errors --------------------------------------------------------------

struct TransportError : Error {
    TransportError(const std::string& what, bool retryable, int status = 0, bool transmitted = false)
        : Error(ErrorKind::transport, what), retryable(retryable), status(status), transmitted(transmitted) {}
    bool retryable;
    int status;        // HTTP status, 0 when no response arrived
    bool transmitted;  // the provider received the request body
};

// Response body did not follow the wire format.
struct ProtocolError : Error {
    explicit ProtocolError(const std::string& what) : Error(ErrorKind::transport, what) {}
};

struct FixtureMissError : Error {
    explicit FixtureMissError(const std::string& what) : Error(ErrorKind::fixture_miss, what) {}
};

// A function call was requested but the model answered without one.
struct ExtractionError : Error {
    explicit ExtractionError(const std::string& what) : Error(ErrorKind::pipeline, what) {}
};

struct ValidationError : Error {
    ValidationError(const std::string& what, std::string field)
        : Error(ErrorKind::pipeline, what), field(std::move(field)) {}
    std::string field;
};

// Checks `value` against a JSON-schema subset (type, properties, required,
// items, enum). Throws ValidationError naming the offending field path.
void validate_arguments(const nlohmann::json& value, const nlohmann::json& schema);

}  // namespace longqa::gateway
