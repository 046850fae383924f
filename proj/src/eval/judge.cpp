#include "longqa/eval/judge.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "longqa/datagen/corpus.hpp"
#include "longqa/parallel.hpp"
#include "longqa/pai/property.hpp"

namespace longqa::eval {

JudgeScore make_score(std::string id, int score, std::string rationale) {
    return {std::move(id), score, std::move(rationale), score == 100};
}

JudgeScore judge_response(const std::string& id, const std::string& question, const std::string& reference,
                          const std::string& prediction, const gateway::Gateway& gateway,
                          const pai::PromptPack& prompts, gateway::TokenAccount& account, JudgeOptions options) {
    if (pai::normalize_whitespace(prediction).empty()) return make_score(id, 0, "empty prediction");

    auto [system, user] =
        prompts.render("judge", {{"question", question}, {"reference", reference}, {"prediction", prediction}});
    auto req = gateway.make_request(std::move(system), std::move(user));
    auto schema = pai::score_schema();
    req.tool_choice = schema.name;
    req.tools.push_back(std::move(schema));

    std::string last;
    for (int attempt = 0; attempt < std::max(1, options.parse_attempts); ++attempt) {
        try {
            const auto args = gateway.call_function(req, kStageJudge, account);
            const auto raw = args.at("score").get<long long>();
            const long long clamped = std::clamp<long long>(raw, 0, 100);
            if (clamped != raw) spdlog::warn("sample {}: judge score {} clamped to {}", id, raw, clamped);
            return make_score(id, static_cast<int>(clamped), args.at("rationale").get<std::string>());
        } catch (const gateway::ExtractionError& e) {
            last = e.what();
        } catch (const gateway::ValidationError& e) {
            last = e.what();
        }
    }
    throw JudgeParseError("sample " + id + ": judge output unusable: " + last);
}

PredictionRecord prediction_from_json(const nlohmann::json& j) {
    try {
        PredictionRecord r;
        r.id = j.at("id").get<std::string>();
        r.question = j.at("question").get<std::string>();
        r.reference = j.at("reference").get<std::string>();
        r.prediction = j.at("prediction").get<std::string>();
        r.qtype = j.value("qtype", "");
        if (j.contains("input_tokens")) r.input_tokens = j.at("input_tokens").get<std::size_t>();
        r.language = language_from_string(j.value("language", "en"));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed prediction record: ") + e.what());
    }
}

nlohmann::json to_json(const PredictionRecord& r) {
    nlohmann::json j = {{"id", r.id},
                        {"question", r.question},
                        {"reference", r.reference},
                        {"prediction", r.prediction},
                        {"language", to_string(r.language)}};
    if (!r.qtype.empty()) j["qtype"] = r.qtype;
    if (r.input_tokens) j["input_tokens"] = *r.input_tokens;
    return j;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
    std::vector<PredictionRecord> out;
    datagen::read_jsonl(path, [&](const nlohmann::json& j) { out.push_back(prediction_from_json(j)); });
    return out;
}

std::vector<JudgeOutcome> judge_all(const std::vector<PredictionRecord>& records, const gateway::Gateway& gateway,
                                    const pai::PromptPack& prompts, gateway::TokenAccount& account,
                                    std::size_t parallelism, JudgeOptions options) {
    std::vector<JudgeOutcome> out(records.size());
    parallel_for(records.size(), parallelism, [&](std::size_t i) {
        const auto& r = records[i];
        out[i].id = r.id;
        try {
            out[i].score = judge_response(r.id, r.question, r.reference, r.prediction, gateway, prompts, account, options);
        } catch (const JudgeParseError& e) {
            spdlog::warn("{}", e.what());
            out[i].error = e.what();
        }
    });
    return out;
}

nlohmann::json to_json(const JudgeScore& s) {
    return {{"id", s.id}, {"score", s.score}, {"perfect", s.perfect}, {"rationale", s.rationale}};
}

}  // namespace longqa::eval
