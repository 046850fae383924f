#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>

#include "../support/fixture_model.hpp"
#include "longqa/datagen/corpus.hpp"
#include "longqa/eval/judge.hpp"
#include "longqa/eval/metrics.hpp"

using namespace longqa;
using namespace longqa::eval;

namespace {

gateway::GatewayOptions fast() {
    gateway::GatewayOptions o;
    o.sleep = [](std::chrono::milliseconds) {};
    return o;
}

// A judge that always returns `args` for submit_score and counts calls.
struct ScriptedJudge {
    nlohmann::json args;
    bool as_text = false;
    std::shared_ptr<std::atomic<int>> calls = std::make_shared<std::atomic<int>>(0);
    std::shared_ptr<std::string> last_user = std::make_shared<std::string>();
    std::shared_ptr<std::string> last_system = std::make_shared<std::string>();

    std::shared_ptr<gateway::Gateway> gateway() const {
        auto self = *this;
        auto backend = std::make_shared<gateway::CallbackBackend>(
            [self](const gateway::ChatRequest& r) {
                ++*self.calls;
                *self.last_system = r.messages.front().content;
                *self.last_user = r.messages.back().content;
                gateway::ChatResponse resp;
                if (self.as_text) {
                    resp.text = "Score: 90";
                } else {
                    resp.tool_calls.push_back({"submit_score", self.args});
                }
                return resp;
            },
            TokenScheme::heuristic());
        return std::make_shared<gateway::Gateway>(backend, fast());
    }
};

JudgeScore judge_with(const ScriptedJudge& j, const std::string& prediction = "an answer") {
    gateway::TokenAccount account;
    return judge_response("s1", "Q?", "ref", prediction, *j.gateway(), pai::PromptPack::defaults(), account);
}

std::vector<JudgeScore> scores_of(const std::vector<int>& values) {
    std::vector<JudgeScore> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.push_back(make_score("s" + std::to_string(i), values[i], ""));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// judge

TEST_CASE("perfect means exactly 100") {
    CHECK(judge_with({{{"score", 100}, {"rationale", "ok"}}}).perfect);
    const auto s = judge_with({{{"score", 85}, {"rationale", "minor gap"}}});
    CHECK(s.score == 85);
    CHECK_FALSE(s.perfect);
    CHECK(s.rationale == "minor gap");
}

TEST_CASE("judge prompt names the rubric and is charged to its stage") {
    ScriptedJudge j{{{"score", 70}, {"rationale", "x"}}};
    gateway::TokenAccount account;
    judge_response("s1", "Which is larger?", "A", "B", *j.gateway(), pai::PromptPack::defaults(), account);
    CHECK(j.last_system->find("accuracy") != std::string::npos);
    CHECK(j.last_system->find("hallucination") != std::string::npos);
    CHECK(j.last_system->find("completeness") != std::string::npos);
    CHECK(*j.last_user == "Question: Which is larger?\n\nReference answer: A\n\nPrediction: B");
    CHECK(account.stages().at("judge").calls == 1);
}

TEST_CASE("empty prediction scores zero without a call") {
    ScriptedJudge j{{{"score", 100}, {"rationale", "x"}}};
    const auto s = judge_with(j, " \n\t");
    CHECK(s.score == 0);
    CHECK_FALSE(s.perfect);
    CHECK(*j.calls == 0);
}

TEST_CASE("out-of-range scores are clamped") {
    CHECK(judge_with({{{"score", 150}, {"rationale", "x"}}}).score == 100);
    CHECK(judge_with({{{"score", 150}, {"rationale", "x"}}}).perfect);
    CHECK(judge_with({{{"score", -5}, {"rationale", "x"}}}).score == 0);
}

TEST_CASE("unusable judge output leaves the sample unscored") {
    ScriptedJudge text;
    text.as_text = true;
    CHECK_THROWS_AS(judge_with(text), JudgeParseError);
    CHECK(*text.calls == 2);
    ScriptedJudge wrong{{{"score", "high"}, {"rationale", "x"}}};
    CHECK_THROWS_AS(judge_with(wrong), JudgeParseError);

    std::vector<PredictionRecord> recs = {{"a", "Q", "R", "P", "comparison", 40'000, Language::en},
                                          {"b", "Q", "R", "", "trend", 60'000, Language::en}};
    gateway::TokenAccount account;
    const auto outcomes = judge_all(recs, *text.gateway(), pai::PromptPack::defaults(), account, 2);
    REQUIRE(outcomes.size() == 2);
    CHECK_FALSE(outcomes[0].score);
    CHECK(outcomes[0].error.find("sample a") != std::string::npos);
    REQUIRE(outcomes[1].score);  // empty prediction never reaches the judge
    CHECK(outcomes[1].score->score == 0);
    const auto report = score_report(outcomes, recs);
    CHECK(report.excluded == 1);
    CHECK(report.overall.n == 1);
}

TEST_CASE("fixture judge gives 100 to a verbatim answer") {
    testing::FixtureModel model;
    auto gw = std::make_shared<gateway::Gateway>(model.backend(), fast());
    gateway::TokenAccount account;
    const auto s = judge_response("s", "Which company?", "AULT ALLIANCE, INC.", "AULT ALLIANCE, INC.", *gw,
                                  pai::PromptPack::defaults(), account);
    CHECK(s.score == 100);
    CHECK(s.perfect);
}

// ---------------------------------------------------------------------------
// aggregation

TEST_CASE("aggregate examples") {
    auto s = aggregate(scores_of({100, 100}));
    CHECK(s.avg_score == 100.0);
    CHECK(s.perfect_rate == 1.0);
    s = aggregate(scores_of({100, 0}));
    CHECK(s.avg_score == 50.0);
    CHECK(s.perfect_rate == 0.5);
    CHECK_THROWS_AS(aggregate({}), EmptySetError);
}

TEST_CASE("aggregate matches a direct computation and ignores order") {
    std::mt19937_64 rng(21);
    for (int round = 0; round < 200; ++round) {
        std::vector<int> v(1 + rng() % 300);
        for (auto& x : v) x = static_cast<int>(rng() % 3 == 0 ? 100 : rng() % 101);
        long long sum = 0;
        std::size_t perfect = 0;
        for (int x : v) {
            sum += x;
            perfect += x == 100;
        }
        const auto s = aggregate(scores_of(v));
        CHECK(s.avg_score == static_cast<double>(sum) / static_cast<double>(v.size()));
        CHECK(s.perfect_rate == static_cast<double>(perfect) / static_cast<double>(v.size()));
        std::shuffle(v.begin(), v.end(), rng);
        const auto t = aggregate(scores_of(v));
        CHECK(t.avg_score == s.avg_score);
        CHECK(t.perfect_rate == s.perfect_rate);
    }
}

TEST_CASE("score report breakdowns") {
    std::vector<PredictionRecord> recs = {
        {"a", "", "", "x", "comparison", 40'000, Language::en},
        {"b", "", "", "x", "comparison", 120'000, Language::en},
        {"c", "", "", "x", "trend", 120'000, Language::en},
        {"d", "", "", "x", "", 5'000, Language::en},
    };
    std::vector<JudgeOutcome> outs = {{"a", make_score("a", 100, ""), ""},
                                      {"b", make_score("b", 50, ""), ""},
                                      {"c", make_score("c", 30, ""), ""},
                                      {"d", make_score("d", 80, ""), ""}};
    const auto r = score_report(outs, recs);
    CHECK(r.overall.avg_score == 65.0);
    CHECK(r.overall.perfect_rate == 0.25);
    CHECK(r.per_qtype.at("comparison").avg_score == 75.0);
    CHECK(r.per_qtype.at("unknown").n == 1);
    CHECK(r.task_weighted_avg_score == doctest::Approx((75.0 + 30.0 + 80.0) / 3));
    CHECK(r.per_bucket.at("Set1").n == 1);
    CHECK(r.per_bucket.at("Set3").n == 2);
    CHECK(r.unbucketed == 1);
    const auto csv = to_csv(r);
    CHECK(csv.starts_with("group,name,n,AS,PR\noverall,all,4,65.00,0.25\n"));
    CHECK(csv.find("bucket,Set3,2,40.00,0.00\n") != std::string::npos);
    const auto j = to_json(r);
    CHECK(j["avg_score"] == 65.0);
    CHECK(j["excluded"] == 0);
    CHECK(j["scores"].size() == 4);
    CHECK_THROWS_AS(score_report({{"a", std::nullopt, "bad"}}, recs), EmptySetError);
}

// ---------------------------------------------------------------------------
// F1

TEST_CASE("f1 worked example") {
    CHECK(qa_f1("the net profit rose", "net profit fell", Language::en) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    CHECK(qa_f1("Net profit, fell!", "net PROFIT fell", Language::en) == 1.0);
    CHECK(qa_f1("alpha beta", "gamma delta", Language::en) == 0.0);
    CHECK(qa_f1("", "x", Language::en) == 0.0);
    CHECK(qa_f1("x", "...", Language::en) == 0.0);
    CHECK(qa_f1("$1,023,000", "1023000", Language::en) == 1.0);
}

TEST_CASE("f1 tokenization") {
    CHECK(f1_tokens("Don't  STOP—now.", Language::en) == std::vector<std::string>{"dont", "stopnow"});
    CHECK(f1_tokens("净利润，增长 A", Language::zh) == std::vector<std::string>{"净", "利", "润", "增", "长", "a"});
    // zh counts characters as a multiset: overlap {利, 润} of 3 and 4
    CHECK(qa_f1("利润高", "净利润低", Language::zh) == doctest::Approx(2.0 * (2.0 / 3) * 0.5 / (2.0 / 3 + 0.5)));
}

TEST_CASE("f1 is symmetric and reflexive") {
    std::mt19937_64 rng(8);
    const char* words[] = {"a", "b", "c", "net", "profit", "利", "润", "!", " "};
    for (int i = 0; i < 500; ++i) {
        std::string x, y;
        for (int k = 0; k < 1 + static_cast<int>(rng() % 8); ++k) x += std::string(words[rng() % 9]) + " ";
        for (int k = 0; k < 1 + static_cast<int>(rng() % 8); ++k) y += std::string(words[rng() % 9]) + " ";
        for (const auto lang : {Language::en, Language::zh}) {
            CHECK(qa_f1(x, y, lang) == doctest::Approx(qa_f1(y, x, lang)).epsilon(1e-15));
            if (!f1_tokens(x, lang).empty()) CHECK(qa_f1(x, x, lang) == 1.0);
        }
    }
}

TEST_CASE("f1 report") {
    std::vector<PredictionRecord> recs = {{"a", "", "net profit fell", "the net profit rose", "trend", 60'000, Language::en},
                                          {"b", "", "利润", "利润", "", std::nullopt, Language::zh}};
    const auto r = f1_report(recs);
    CHECK(r.rows[0].f1 == doctest::Approx(4.0 / 7.0));
    CHECK(r.rows[1].f1 == 1.0);
    CHECK(r.mean_f1 == doctest::Approx((4.0 / 7.0 + 1.0) / 2));
    CHECK(r.per_bucket.at("Set2") == doctest::Approx(4.0 / 7.0));
    CHECK(r.per_qtype.at("unknown") == 1.0);
    CHECK_THROWS_AS(f1_report({}), EmptySetError);
}

// ---------------------------------------------------------------------------
// buckets and efficiency

TEST_CASE("length buckets are left-open, right-closed") {
    CHECK_FALSE(length_bucket(10'000));
    CHECK(length_bucket(10'001) == "Set1");
    CHECK(length_bucket(50'000) == "Set1");
    CHECK(length_bucket(50'001) == "Set2");
    CHECK(length_bucket(100'000) == "Set2");
    CHECK(length_bucket(100'001) == "Set3");
    CHECK(length_bucket(200'000) == "Set3");
    CHECK(length_bucket(200'001) == "Set4");
    CHECK(length_bucket(250'000) == "Set4");
    CHECK_FALSE(length_bucket(250'001));
}

TEST_CASE("efficiency ratios and conservation") {
    gateway::TokenAccount multi, single;
    multi.record("extraction", {400, 10});
    multi.record("retrieval", {500, 5});
    multi.record("summarization", {100, 20});
    single.record("direct", {25, 3});
    const auto r = efficiency_report({{"multi", multi}, {"single", single}});
    REQUIRE(r.ratios.size() == 2);
    const auto it = std::find_if(r.ratios.begin(), r.ratios.end(), [](const auto& x) { return x.numerator == "single"; });
    REQUIRE(it != r.ratios.end());
    CHECK(*it->input_ratio == 0.025);
    std::size_t sum = 0;
    for (const auto& [_, s] : r.runs.at("multi").per_stage) sum += s.input_tokens;
    CHECK(r.runs.at("multi").total_input_tokens == sum);
    CHECK(ratio_table(r).find("single / multi input tokens = 0.0250") != std::string::npos);
    const auto none = efficiency_report({{"only", gateway::TokenAccount{}}, {"other", single}});
    CHECK_FALSE(std::find_if(none.ratios.begin(), none.ratios.end(),
                             [](const auto& x) { return x.denominator == "only"; })->input_ratio);
    CHECK(to_json(none)["ratios"][1]["input_ratio"].is_null());
}

TEST_CASE("predictions jsonl") {
    const auto path = std::filesystem::temp_directory_path() / "longqa_test_eval" / "preds.jsonl";
    std::vector<PredictionRecord> recs = {{"a", "Q", "R", "P", "trend", 60'000, Language::zh},
                                          {"b", "Q2", "R2", "P2", "", std::nullopt, Language::en}};
    std::vector<nlohmann::json> rows;
    for (const auto& r : recs) rows.push_back(to_json(r));
    datagen::write_jsonl(path, rows);
    const auto back = read_predictions(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].language == Language::zh);
    CHECK(back[0].input_tokens == 60'000u);
    CHECK(back[1].qtype.empty());
    CHECK_FALSE(back[1].input_tokens);
    CHECK_THROWS_AS(prediction_from_json({{"id", "x"}}), FormatError);
}
