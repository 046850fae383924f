#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longqa/error.hpp"
#include "longqa/eval/judge.hpp"
#include "longqa/gateway/token_account.hpp"
#include "longqa/textproc/document.hpp"

namespace longqa::eval {

// --- F1 ----------------------------------------------------------------------

// en: ASCII-lowercased, punctuation deleted, split on whitespace.
// zh: one token per code point, whitespace and punctuation dropped.
std::vector<std::string> f1_tokens(std::string_view text, Language language);

// Token-bag F1 with multiset overlap; 0 when either side has no tokens.
double qa_f1(std::string_view prediction, std::string_view reference, Language language);

// --- length buckets ----------------------------------------------------------

// Set1 (10K,50K], Set2 (50K,100K], Set3 (100K,200K], Set4 (200K,250K].
std::optional<std::string> length_bucket(std::size_t input_tokens);

// --- scores ------------------------------------------------------------------

struct EmptySetError : Error {
    explicit EmptySetError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct ScoreSummary {
    std::size_t n = 0;
    double avg_score = 0;     // AS
    double perfect_rate = 0;  // PR
};

// Throws EmptySetError on an empty list.
ScoreSummary aggregate(const std::vector<JudgeScore>& scores);

struct ScoreReport {
    ScoreSummary overall;  // plain mean over scored samples
    // Mean of the per-qtype means, for comparison with task-averaged tables.
    double task_weighted_avg_score = 0;
    double task_weighted_perfect_rate = 0;
    std::size_t excluded = 0;
    std::size_t unbucketed = 0;
    std::map<std::string, ScoreSummary> per_bucket;
    std::map<std::string, ScoreSummary> per_qtype;  // "" is reported as "unknown"
    std::vector<JudgeOutcome> outcomes;
};

// `records` supplies qtype and input_tokens by id. Throws EmptySetError
// when nothing was scored.
ScoreReport score_report(const std::vector<JudgeOutcome>& outcomes, const std::vector<PredictionRecord>& records);
nlohmann::json to_json(const ScoreReport& r);
// "group,name,n,AS,PR" rows: overall, then per qtype, then per bucket.
std::string to_csv(const ScoreReport& r);

struct F1Row {
    std::string id;
    double f1 = 0;
};

struct F1Report {
    std::size_t n = 0;
    double mean_f1 = 0;
    std::map<std::string, double> per_qtype;
    std::map<std::string, double> per_bucket;
    std::vector<F1Row> rows;
};

// `language` overrides each record's own language when set.
F1Report f1_report(const std::vector<PredictionRecord>& records, std::optional<Language> language = std::nullopt);
nlohmann::json to_json(const F1Report& r);

// --- efficiency ---------------------------------------------------------------

struct EfficiencyRatio {
    std::string numerator;
    std::string denominator;
    std::optional<double> input_ratio;  // empty when the denominator used no input
};

struct EfficiencyReport {
    std::map<std::string, gateway::EfficiencyTotals> runs;
    std::vector<EfficiencyRatio> ratios;  // every ordered pair of distinct labels
};

EfficiencyReport efficiency_report(const std::map<std::string, gateway::TokenAccount>& accounts);
nlohmann::json to_json(const EfficiencyReport& r);
// Plain-text ratio table.
std::string ratio_table(const EfficiencyReport& r);

}  // namespace longqa::eval
