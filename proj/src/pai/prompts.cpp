#include "longqa/pai/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "longqa/error.hpp"

namespace longqa::pai {

namespace {

const std::map<std::string, std::vector<std::string>, std::less<>>& slot_table() {
    static const std::map<std::string, std::vector<std::string>, std::less<>> table = {
        {"extraction", {"query", "subjects"}},
        {"sub_questions", {"query", "subjects"}},
        {"relevance", {"sub_query", "chunk_label", "chunk"}},
        {"answer", {"sub_query", "context"}},
        {"answer_with_query", {"query", "sub_query", "context"}},
        {"summarize", {"query", "findings"}},
        {"direct", {"query", "context"}},
        {"rag", {"query", "context"}},
        {"judge", {"question", "reference", "prediction"}},
        {"question", {"qtype", "metrics", "documents"}},
    };
    return table;
}

// Slot names referenced by a template body.
std::set<std::string> referenced_slots(std::string_view text) {
    std::set<std::string> out;
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string_view::npos) {
        const auto end = text.find("}}", pos + 2);
        if (end == std::string_view::npos) break;
        out.emplace(text.substr(pos + 2, end - pos - 2));
        pos = end + 2;
    }
    return out;
}

void check_slots(const std::string& name, const PromptTemplate& t) {
    const auto& allowed = PromptPack::slots(name);
    for (const auto* body : {&t.system, &t.user}) {
        for (const auto& s : referenced_slots(*body)) {
            if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
                throw ConfigError("prompt '" + name + "' references undeclared slot {{" + s + "}}");
            }
        }
    }
}

nlohmann::json string_property(std::string description) {
    return {{"type", "string"}, {"description", std::move(description)}};
}

std::string quoted_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += i + 1 == items.size() ? " and " : ", ";
        out += '"' + items[i] + '"';
    }
    return out;
}

}  // namespace

std::string_view to_string(Domain domain) noexcept {
    switch (domain) {
        case Domain::finance: return "finance";
        case Domain::legal: return "legal";
        case Domain::academic: return "academic";
    }
    return "finance";
}

Domain domain_from_string(std::string_view s) {
    if (s == "finance") return Domain::finance;
    if (s == "legal") return Domain::legal;
    if (s == "academic") return Domain::academic;
    throw ConfigError("unknown domain '" + std::string(s) + "' (expected finance, legal or academic)");
}

const DomainExamples& domain_examples(Domain domain) {
    static const DomainExamples finance{{"profit", "revenue", "debt"}, "financial document title"};
    static const DomainExamples legal{{"verdict"}, "legal judgment"};
    static const DomainExamples academic{{"reference", "citation"}, "paper title"};
    switch (domain) {
        case Domain::legal: return legal;
        case Domain::academic: return academic;
        default: return finance;
    }
}

std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    for (;;) {
        const auto open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        const std::string key(text.substr(open + 2, close - open - 2));
        const auto it = values.find(key);
        if (it == values.end()) throw ConfigError("no value for prompt slot {{" + key + "}}");
        out.append(text.substr(pos, open - pos)).append(it->second);
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

PromptPack PromptPack::defaults() {
    PromptPack pack;
    auto& t = pack.templates_;
    t["extraction"] = {
        "You are a property extraction agent. A property is a measurable metric together with the subject, "
        "the information source the metric must be read from. List every property needed to answer the "
        "question, using the document titles below as subjects.",
        "Documents:\n{{subjects}}\n\nQuestion: {{query}}"};
    t["sub_questions"] = {
        "Break the question into the sub-questions that must be answered first. Each sub-question should be "
        "answerable from a single document.",
        "Documents:\n{{subjects}}\n\nQuestion: {{query}}"};
    t["relevance"] = {
        "Decide whether a document chunk contains information that helps answer the sub-question.",
        "Sub-question: {{sub_query}}\n\nChunk {{chunk_label}}:\n{{chunk}}"};
    t["answer"] = {
        "Answer the sub-question using only the provided excerpts. If the answer is a single figure or name, "
        "reply with that value alone.",
        "Excerpts:\n{{context}}\n\nSub-question: {{sub_query}}"};
    t["answer_with_query"] = {
        "Answer the sub-question using only the provided excerpts. If the answer is a single figure or name, "
        "reply with that value alone.",
        "Excerpts:\n{{context}}\n\nOriginal question: {{query}}\nSub-question: {{sub_query}}"};
    t["summarize"] = {
        "Given the original question and the findings gathered for it, write the final conclusion. Reply with "
        "the conclusion only.",
        "Question: {{query}}\n\nFindings:\n{{findings}}"};
    t["direct"] = {"Answer the question using the documents.", "{{context}}\n\nQuestion: {{query}}"};
    t["rag"] = {"Answer the question using the retrieved excerpts.", "Excerpts:\n{{context}}\n\nQuestion: {{query}}"};
    t["judge"] = {
        "You grade answers to long-document questions. Score the prediction from 0 to 100 against the reference, "
        "judging accuracy, hallucinations, and completeness. 100 means fully correct and complete with nothing "
        "invented.",
        "Question: {{question}}\n\nReference answer: {{reference}}\n\nPrediction: {{prediction}}"};
    t["question"] = {
        "Write one question about the listed financial reports. Reply with the question only.",
        "Question type: {{qtype}}\nMetrics: {{metrics}}\nReports:\n{{documents}}"};
    return pack;
}

PromptPack PromptPack::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("prompt pack must be a JSON object");
    PromptPack pack = defaults();
    for (const auto& [name, body] : j.items()) {
        slots(name);
        if (!body.is_object()) throw ConfigError("prompt '" + name + "' must be an object");
        PromptTemplate t = pack.templates_.at(name);
        for (const auto& [key, value] : body.items()) {
            if (!value.is_string()) throw ConfigError("prompt '" + name + "." + key + "' must be a string");
            if (key == "system") t.system = value.get<std::string>();
            else if (key == "user") t.user = value.get<std::string>();
            else throw ConfigError("prompt '" + name + "' has unknown field '" + key + "'");
        }
        check_slots(name, t);
        pack.templates_[name] = std::move(t);
    }
    return pack;
}

PromptPack PromptPack::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open prompt pack " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("prompt pack " + path.string() + ": " + e.what());
    }
}

nlohmann::json PromptPack::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, t] : templates_) j[name] = {{"system", t.system}, {"user", t.user}};
    return j;
}

const std::vector<std::string>& PromptPack::slots(std::string_view name) {
    const auto& table = slot_table();
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown prompt '" + std::string(name) + "'");
    return it->second;
}

const PromptTemplate& PromptPack::at(std::string_view name) const {
    const auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt '" + std::string(name) + "'");
    return it->second;
}

std::pair<std::string, std::string> PromptPack::render(std::string_view name,
                                                       const std::map<std::string, std::string>& values) const {
    const auto& t = at(name);
    return {fill_template(t.system, values), fill_template(t.user, values)};
}

gateway::FunctionSchema extract_properties_schema(Domain domain) {
    const auto& ex = domain_examples(domain);
    const std::string metric_hint = "The measurable factor, for example " + quoted_list(ex.metrics) + ".";
    const std::string subject_hint = "The information source the metric is read from, for example a " +
                                     ex.subject + ".";
    nlohmann::json item = {{"type", "object"},
                           {"properties", {{"metric", string_property(metric_hint)},
                                           {"subject", string_property(subject_hint)}}},
                           {"required", {"metric", "subject"}}};
    return {"extract_properties",
            "Record the properties (metric and subject pairs) the question depends on.",
            {{"type", "object"},
             {"properties", {{"properties", {{"type", "array"}, {"items", std::move(item)}}}}},
             {"required", {"properties"}}}};
}

gateway::FunctionSchema sub_questions_schema() {
    return {"generate_sub_questions",
            "Record the sub-questions needed to answer the question.",
            {{"type", "object"},
             {"properties",
              {{"sub_questions", {{"type", "array"}, {"items", {{"type", "string"}}}}}}},
             {"required", {"sub_questions"}}}};
}

gateway::FunctionSchema relevance_schema() {
    return {"judge_relevance",
            "Record whether the chunk is relevant to the sub-question.",
            {{"type", "object"},
             {"properties", {{"relevant", {{"type", "boolean"}}}}},
             {"required", {"relevant"}}}};
}

gateway::FunctionSchema score_schema() {
    return {"submit_score",
            "Record the grade for the prediction.",
            {{"type", "object"},
             {"properties", {{"score", {{"type", "integer"}, {"description", "0 to 100"}}},
                             {"rationale", {{"type", "string"}}}}},
             {"required", {"score", "rationale"}}}};
}

}  // namespace longqa::pai
