#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longqa/error.hpp"
#include "longqa/gateway/gateway.hpp"
#include "longqa/pai/prompts.hpp"
#include "longqa/textproc/document.hpp"

namespace longqa::datagen {

enum class QuestionType { single_source, comparison, clustering, trend, chain };

std::string_view to_string(QuestionType t) noexcept;
QuestionType question_type_from_string(std::string_view s);  // throws FormatError
inline bool is_multi_source(QuestionType t) noexcept { return t != QuestionType::single_source; }

// Catalog cannot supply enough documents for the requested question type.
struct CapacityError : Error {
    explicit CapacityError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct QuestionGenerationError : Error {
    explicit QuestionGenerationError(const std::string& what) : Error(ErrorKind::pipeline, what) {}
};

class MetricPool {
public:
    // Drops case-insensitive duplicates (first spelling wins); throws ConfigError when empty.
    MetricPool(std::string domain, const std::vector<std::string>& metrics);

    static MetricPool finance_default();
    static MetricPool from_json(const nlohmann::json& j);  // {"domain", "metrics": [...]}
    nlohmann::json to_json() const;

    const std::string& domain() const noexcept { return domain_; }
    const std::vector<std::string>& metrics() const noexcept { return metrics_; }

private:
    std::string domain_;
    std::vector<std::string> metrics_;
};

struct CatalogEntry {
    std::string doc_id;
    std::string company;
    int year = 0;
    std::size_t token_count = 0;
};

// Scores a company from its report years (ascending); higher ranks first.
using CompanyRanking = std::function<double(const std::string& company, const std::vector<int>& years)>;

// Default ranking: length of the longest run of consecutive report years.
double consecutive_years(const std::string& company, const std::vector<int>& years);

class Catalog {
public:
    explicit Catalog(const std::vector<Document>& docs, CompanyRanking ranking = consecutive_years);

    const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }  // sorted (company, year, id)
    // Companies best first; ties by name.
    const std::vector<std::string>& ranked_companies() const noexcept { return ranked_; }
    // Entries of one company in year order (first document per year).
    std::vector<const CatalogEntry*> reports_of(const std::string& company) const;
    const CatalogEntry& entry(std::string_view doc_id) const;

private:
    std::vector<CatalogEntry> entries_;
    std::vector<std::string> ranked_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> by_company_;  // one entry per year
};

struct QuestionSpec {
    QuestionType qtype = QuestionType::single_source;
    std::vector<std::string> metrics;
    std::vector<std::string> doc_refs;
    std::uint64_t seed = 0;

    bool operator==(const QuestionSpec&) const = default;
};

// Deterministic in (pool, catalog, qtype, seed). Trend picks one company
// over consecutive years; comparison and clustering pick distinct companies
// from one year when some year has enough of them.
QuestionSpec sample_question_spec(const MetricPool& pool, const Catalog& catalog, QuestionType qtype, std::uint64_t seed);

// The question type for draw `seed`: single-source with probability
// `single_weight`, otherwise one of the multi-source types the catalog can
// serve, uniformly.
QuestionType sample_question_type(const Catalog& catalog, double single_weight, std::uint64_t seed);

enum class GenerationMode { template_text, llm };

// Template mode is backend-free. LLM mode sends the "question" prompt and
// needs `gateway` and `account`.
std::string generate_question(const QuestionSpec& spec, const Catalog& catalog, GenerationMode mode,
                              const gateway::Gateway* gateway = nullptr, const pai::PromptPack* prompts = nullptr,
                              gateway::TokenAccount* account = nullptr);

struct QuestionRecord {
    std::string id;
    std::string question;
    QuestionSpec spec;
    std::size_t combined_tokens = 0;

    bool operator==(const QuestionRecord&) const = default;
};

nlohmann::json to_json(const QuestionRecord& q);
QuestionRecord question_from_json(const nlohmann::json& j);

struct QuestionBatchConfig {
    std::size_t count = 100;
    std::uint64_t seed = 0;
    double single_weight = 0.456;
    GenerationMode mode = GenerationMode::template_text;
};

struct QuestionBatch {
    std::vector<QuestionRecord> accepted;
    std::vector<QuestionRecord> rejected;  // over the combined-token ceiling
};

// Draws `count` questions; question i uses seed mix(seed, i).
QuestionBatch generate_questions(const std::vector<Document>& corpus, const MetricPool& pool,
                                 const QuestionBatchConfig& config, const gateway::Gateway* gateway = nullptr,
                                 const pai::PromptPack* prompts = nullptr, gateway::TokenAccount* account = nullptr);

// SplitMix64 of (seed, index); per-item seeds independent of batch size.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace longqa::datagen
