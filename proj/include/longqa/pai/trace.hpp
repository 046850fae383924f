#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longqa/error.hpp"
#include "longqa/gateway/token_account.hpp"
#include "longqa/pai/property.hpp"

namespace longqa::pai {

struct ChunkRef {
    std::string doc_id;
    std::size_t index = 0;

    auto operator<=>(const ChunkRef&) const = default;
};

inline constexpr std::string_view kNoEvidence = "No relevant evidence was found.";

struct Finding {
    SubQuery sub_query;
    std::vector<ChunkRef> relevant_chunks;  // sorted ascending
    std::string sub_answer;

    bool operator==(const Finding&) const = default;
};

struct ReasoningTrace {
    std::string query;
    std::vector<Property> properties;
    std::vector<Finding> findings;  // parallel to properties in pai mode
    std::string conclusion;
    gateway::TokenAccount account;
};

// The reasoning-trace text format:
//
//   This question demands further reasoning:
//   <reasoning>
//   This question focuses on the key properties as follows:
//   {'metric': '<metric>', 'subject': '<subject>'}          (one per property)
//   The analysis of the above properties is as follows:
//   In <subject>, the <metric> is <value>.                  (one per finding)
//   The reasoning steps have been completed.
//   </reasoning>
//   Conclusion: <conclusion>
//
// A trace with neither properties nor findings renders as the conclusion
// line alone. No trailing newline.
std::string render_trace(const ReasoningTrace& trace);

struct TraceParseError : Error {
    TraceParseError(const std::string& what, std::size_t line) : Error(ErrorKind::pipeline, what), line(line) {}
    std::size_t line;  // 1-based
};

// Inverse of render_trace (the account and relevant chunks are not part of
// the text). Text without a reasoning block becomes the conclusion.
ReasoningTrace parse_trace(std::string_view text);

// True when a sub-answer is a bare value that fits the finding template.
bool is_scalar_answer(std::string_view answer);

// The payload a finding contributes to the text: the templated value when
// the sub-answer is scalar (or already a full finding line for `property`),
// otherwise the whole normalized sub-answer.
std::string finding_value(const Property* property, std::string_view sub_answer);

// The analysis line a finding renders to.
std::string finding_line(const Property* property, std::string_view sub_answer);

// Structured form, with the account and rendered text alongside.
nlohmann::json to_json(const ReasoningTrace& trace);
ReasoningTrace trace_from_json(const nlohmann::json& j);

}  // namespace longqa::pai
