#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace longqa::pai {

// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

// A (metric, subject) pair: what to measure and which source to read it from.
struct Property {
    std::string metric;
    std::string subject;

    // Normalizes whitespace; throws PipelineError if either field ends up empty.
    static Property make(std::string_view metric, std::string_view subject);

    // Case-insensitive comparison after whitespace normalization.
    bool same_as(const Property& other) const;

    bool operator==(const Property&) const = default;
};

// Keeps the first occurrence of every property under same_as().
std::vector<Property> deduplicate(const std::vector<Property>& properties);

struct SubQuery {
    std::optional<Property> property;  // absent for directly generated sub-questions
    std::string text;

    bool operator==(const SubQuery&) const = default;
};

// "What was the <metric> of the <subject>?" with both slots filled verbatim.
SubQuery render_sub_query(const Property& property);

// Inverse of render_sub_query's template; nullopt if `text` does not match.
std::optional<Property> parse_sub_query(std::string_view text);

}  // namespace longqa::pai
