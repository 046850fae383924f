#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "longqa/error.hpp"
#include "longqa/gateway/gateway.hpp"
#include "longqa/pai/prompts.hpp"
#include "longqa/textproc/document.hpp"

namespace longqa::eval {

inline constexpr std::string_view kStageJudge = "judge";

struct JudgeScore {
    std::string id;
    int score = 0;  // [0, 100]
    std::string rationale;
    bool perfect = false;  // score == 100

    bool operator==(const JudgeScore&) const = default;
};

JudgeScore make_score(std::string id, int score, std::string rationale);

// The judge never produced a usable structured score.
struct JudgeParseError : Error {
    explicit JudgeParseError(const std::string& what) : Error(ErrorKind::pipeline, what) {}
};

struct JudgeOptions {
    int parse_attempts = 2;  // calls per sample before giving up on its output
};

// An empty (all-whitespace) prediction scores 0 without a call. Scores
// outside [0, 100] are clamped with a warning.
JudgeScore judge_response(const std::string& id, const std::string& question, const std::string& reference,
                          const std::string& prediction, const gateway::Gateway& gateway,
                          const pai::PromptPack& prompts, gateway::TokenAccount& account, JudgeOptions options = {});

// Predictions JSONL row. qtype, input_tokens and language are optional
// extras used for breakdowns and F1 tokenization.
struct PredictionRecord {
    std::string id;
    std::string question;
    std::string reference;
    std::string prediction;
    std::string qtype;              // empty when unknown
    std::optional<std::size_t> input_tokens;
    Language language = Language::en;
};

PredictionRecord prediction_from_json(const nlohmann::json& j);  // throws FormatError
nlohmann::json to_json(const PredictionRecord& r);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

struct JudgeOutcome {
    std::string id;
    std::optional<JudgeScore> score;  // empty when unscored
    std::string error;
};

// Judges every record with bounded parallelism; results keep input order.
// Parse failures leave the sample unscored; other errors propagate.
std::vector<JudgeOutcome> judge_all(const std::vector<PredictionRecord>& records, const gateway::Gateway& gateway,
                                    const pai::PromptPack& prompts, gateway::TokenAccount& account,
                                    std::size_t parallelism, JudgeOptions options = {});

nlohmann::json to_json(const JudgeScore& s);

}  // namespace longqa::eval
