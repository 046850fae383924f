#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longqa/gateway/chat.hpp"

namespace longqa::pai {

enum class Domain { finance, legal, academic };

std::string_view to_string(Domain domain) noexcept;
Domain domain_from_string(std::string_view s);  // throws ConfigError

// Few-shot hints embedded in the extraction function schema.
struct DomainExamples {
    std::vector<std::string> metrics;
    std::string subject;
};

const DomainExamples& domain_examples(Domain domain);

struct PromptTemplate {
    std::string system;
    std::string user;

    bool operator==(const PromptTemplate&) const = default;
};

// Replaces every {{slot}} in one pass; values are never re-expanded.
// Throws ConfigError for a slot with no value.
std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values);

// Named templates with fixed slot sets. A pack file overrides any subset
// of the defaults:
//   {"relevance": {"system": "...", "user": "... {{sub_query}} ..."}, ...}
class PromptPack {
public:
    static PromptPack defaults();
    static PromptPack from_json(const nlohmann::json& j);  // throws ConfigError
    static PromptPack load(const std::filesystem::path& path);

    nlohmann::json to_json() const;

    // The slots template `name` may reference. Throws ConfigError for an unknown name.
    static const std::vector<std::string>& slots(std::string_view name);

    const PromptTemplate& at(std::string_view name) const;

    // Filled (system, user) pair for template `name`.
    std::pair<std::string, std::string> render(std::string_view name,
                                               const std::map<std::string, std::string>& values) const;

    bool operator==(const PromptPack&) const = default;

private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Function schemas the agents call.
gateway::FunctionSchema extract_properties_schema(Domain domain);
gateway::FunctionSchema sub_questions_schema();
gateway::FunctionSchema relevance_schema();
gateway::FunctionSchema score_schema();

}  // namespace longqa::pai
