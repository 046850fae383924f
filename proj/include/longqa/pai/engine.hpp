#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longqa/gateway/gateway.hpp"
#include "longqa/pai/prompts.hpp"
#include "longqa/pai/retriever.hpp"
#include "longqa/pai/trace.hpp"
#include "longqa/textproc/chunker.hpp"

namespace longqa::pai {

enum class Mode { pai, pai_minus, rag, direct };

std::string_view to_string(Mode mode) noexcept;
Mode mode_from_string(std::string_view s);  // accepts "pai-minus" and "pai_minus"

inline constexpr std::string_view kStageExtraction = "extraction";
inline constexpr std::string_view kStageRetrieval = "retrieval";
inline constexpr std::string_view kStageAnswering = "answering";
inline constexpr std::string_view kStageSummarization = "summarization";

struct PipelineConfig {
    Mode mode = Mode::pai;
    std::size_t chunk_budget = kDefaultChunkBudget;
    std::size_t relevance_parallelism = 8;
    std::size_t rag_top_k = 50;
    Domain domain = Domain::finance;
    // Largest packed answering prompt, in tokens of the engine's scheme.
    std::size_t context_budget = 120'000;
    // Show the original question next to each sub-query when answering.
    bool answer_with_query = false;

    void validate() const;  // throws ConfigError

    nlohmann::json to_json() const;
    // Fields absent from `j` keep their defaults.
    static PipelineConfig from_json(const nlohmann::json& j);
};

// A run failed part-way; `partial` holds whatever was produced, including
// the tokens spent.
class RunError : public Error {
public:
    RunError(ErrorKind kind, const std::string& what, ReasoningTrace partial)
        : Error(kind, what), partial_(std::move(partial)) {}
    const ReasoningTrace& partial() const noexcept { return partial_; }

private:
    ReasoningTrace partial_;
};

// Nothing to retrieve for: extraction or sub-question generation came back empty.
struct EmptyExtractionError : Error {
    explicit EmptyExtractionError(const std::string& what) : Error(ErrorKind::pipeline, what) {}
};

// Immutable after construction; safe to share between threads.
class Engine {
public:
    Engine(std::shared_ptr<const gateway::Gateway> gateway, PipelineConfig config,
           PromptPack prompts = PromptPack::defaults(), TokenScheme scheme = TokenScheme::heuristic(),
           std::shared_ptr<const Retriever> retriever = nullptr);

    const PipelineConfig& config() const noexcept { return config_; }
    const PromptPack& prompts() const noexcept { return prompts_; }

    std::vector<Property> extract_properties(std::string_view query, const std::vector<Document>& docs,
                                             gateway::TokenAccount& account) const;
    std::vector<SubQuery> generate_sub_questions_direct(std::string_view query, const std::vector<Document>& docs,
                                                        gateway::TokenAccount& account) const;
    bool judge_chunk_relevance(const SubQuery& sq, const Chunk& chunk, gateway::TokenAccount& account) const;
    // `relevant` must be in (doc_id, index) order; tail chunks are dropped
    // when the packed prompt would exceed the context budget.
    Finding answer_sub_query(const SubQuery& sq, std::string_view query, const std::vector<const Chunk*>& relevant,
                             const std::vector<Document>& docs, gateway::TokenAccount& account) const;
    std::string summarize(std::string_view query, const std::vector<Finding>& findings,
                          gateway::TokenAccount& account) const;

    // Every chunk of every document, documents in the given order.
    std::vector<Chunk> chunk_pool(const std::vector<Document>& docs) const;

    // Full runs. Each throws RunError carrying the partial trace.
    ReasoningTrace run_pai(std::string_view query, const std::vector<Document>& docs) const;
    ReasoningTrace run_rag_baseline(std::string_view query, const std::vector<Document>& docs) const;
    ReasoningTrace run_direct(std::string_view query, const std::vector<Document>& docs) const;
    // Dispatches on config().mode.
    ReasoningTrace run(std::string_view query, const std::vector<Document>& docs) const;

private:
    std::string pack(const std::vector<const Chunk*>& chunks, const std::vector<Document>& docs,
                     std::size_t overhead) const;

    std::shared_ptr<const gateway::Gateway> gateway_;
    PipelineConfig config_;
    PromptPack prompts_;
    TokenScheme scheme_;
    std::shared_ptr<const Retriever> retriever_;
};

// "<title>, part <index>" label used for a chunk inside prompts.
std::string chunk_label(const Chunk& chunk, const std::vector<Document>& docs);

}  // namespace longqa::pai
