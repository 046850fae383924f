#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "longqa/datagen/questions.hpp"
#include "longqa/pai/engine.hpp"

namespace longqa::datagen {

struct AugmentedSample {
    std::string id;
    std::string question;
    std::vector<std::string> doc_refs;
    QuestionType qtype = QuestionType::single_source;
    std::string plain_answer;  // trace.conclusion
    std::string cot_answer;    // render_trace(trace)
    pai::ReasoningTrace trace;
    std::size_t combined_input_tokens = 0;
};

// Runs the engine on one accepted question. Failures are rethrown as
// pai::RunError with the question id in the message.
AugmentedSample augment_answer(const QuestionRecord& question, const std::vector<Document>& corpus,
                               const pai::Engine& engine);

struct AugmentFailure {
    std::string id;
    ErrorKind kind = ErrorKind::pipeline;
    std::string message;
};

struct AugmentBatch {
    std::vector<AugmentedSample> samples;  // in question order
    std::vector<AugmentFailure> failures;
};

// Augments questions with bounded parallelism. Per-question failures are
// collected, except fixture misses, which abort the batch.
AugmentBatch augment_all(const std::vector<QuestionRecord>& questions, const std::vector<Document>& corpus,
                         const pai::Engine& engine, std::size_t parallelism);

nlohmann::json to_json(const AugmentedSample& s);
AugmentedSample sample_from_json(const nlohmann::json& j);

struct TrainingSample {
    std::string id;
    std::string prompt_text;
    std::string target_text;
    // Half-open spans in code points over prompt_text + target_text.
    std::vector<std::pair<std::size_t, std::size_t>> loss_mask;
};

// Layout: each document as "--- Document: <company> <year> ---\n<text>",
// joined by blank lines, then a blank line and "Question: <q>\nAnswer:".
std::string training_prompt(const std::string& question, const std::vector<const Document*>& docs);

TrainingSample build_training_sample(const AugmentedSample& sample, const std::vector<Document>& corpus);

nlohmann::json to_json(const TrainingSample& t);

// --- stats -----------------------------------------------------------------

struct StatsRow {
    QuestionType qtype = QuestionType::single_source;
    std::size_t input_tokens = 0;
    std::optional<std::size_t> cot_tokens;
    std::optional<std::size_t> plain_tokens;
};

std::vector<StatsRow> stats_rows(const std::vector<AugmentedSample>& samples, const TokenScheme& scheme);
std::vector<StatsRow> stats_rows(const std::vector<QuestionRecord>& questions);

struct Histogram {
    std::size_t width = 0;
    std::map<std::size_t, std::size_t> counts;  // bucket start -> count
};

struct DatasetStats {
    std::size_t samples = 0;
    std::size_t single_source = 0;
    std::size_t multi_source = 0;
    double single_ratio = 0;  // 0 for an empty set
    std::map<std::string, std::size_t> per_qtype;
    Histogram input_tokens{50'000, {}};
    Histogram cot_tokens{50, {}};
    Histogram plain_tokens{50, {}};
    double mean_cot_tokens = 0;
    double mean_plain_tokens = 0;
};

DatasetStats dataset_stats(const std::vector<StatsRow>& rows);
nlohmann::json to_json(const DatasetStats& s);
// "histogram,bucket_start,bucket_end,count" rows.
std::string histograms_csv(const DatasetStats& s);

}  // namespace longqa::datagen
