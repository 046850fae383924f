#include "longqa/gateway/token_account.hpp"

namespace longqa::gateway {

TokenAccount::TokenAccount(const TokenAccount& other) : stages_(other.stages()) {}

TokenAccount& TokenAccount::operator=(const TokenAccount& other) {
    if (this != &other) {
        auto copy = other.stages();
        std::lock_guard lock(mutex_);
        stages_ = std::move(copy);
    }
    return *this;
}

TokenAccount TokenAccount::from_stages(std::map<std::string, StageTally> stages) {
    TokenAccount account;
    account.stages_ = std::move(stages);
    return account;
}

void TokenAccount::record(std::string_view stage, const Usage& usage) {
    std::lock_guard lock(mutex_);
    auto& tally = stages_[std::string(stage)];
    ++tally.calls;
    tally.input_tokens += usage.input_tokens;
    tally.output_tokens += usage.output_tokens;
}

void TokenAccount::record_failed_attempt(std::string_view stage, std::size_t input_tokens) {
    std::lock_guard lock(mutex_);
    auto& tally = stages_[std::string(stage)];
    ++tally.failed_attempts;
    tally.input_tokens += input_tokens;
}

void TokenAccount::merge(const TokenAccount& other) {
    const auto theirs = other.stages();
    std::lock_guard lock(mutex_);
    for (const auto& [stage, tally] : theirs) stages_[stage] += tally;
}

std::map<std::string, StageTally> TokenAccount::stages() const {
    std::lock_guard lock(mutex_);
    return stages_;
}

StageTally TokenAccount::total() const {
    StageTally sum;
    for (const auto& [_, tally] : stages()) sum += tally;
    return sum;
}

EfficiencyTotals efficiency_totals(const TokenAccount& account) {
    EfficiencyTotals out;
    out.per_stage = account.stages();
    for (const auto& [_, tally] : out.per_stage) {
        out.total_input_tokens += tally.input_tokens;
        out.total_output_tokens += tally.output_tokens;
        out.total_calls += tally.calls;
    }
    return out;
}

nlohmann::json to_json(const TokenAccount& account) {
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [stage, t] : account.stages()) {
        stages[stage] = {{"calls", t.calls},
                         {"input_tokens", t.input_tokens},
                         {"output_tokens", t.output_tokens},
                         {"failed_attempts", t.failed_attempts}};
    }
    return {{"stages", std::move(stages)}};
}

TokenAccount account_from_json(const nlohmann::json& j) {
    try {
        std::map<std::string, StageTally> stages;
        for (const auto& [stage, t] : j.at("stages").items()) {
            stages[stage] = {t.value("calls", std::size_t{0}), t.value("input_tokens", std::size_t{0}),
                             t.value("output_tokens", std::size_t{0}), t.value("failed_attempts", std::size_t{0})};
        }
        return TokenAccount::from_stages(std::move(stages));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed token account: ") + e.what());
    }
}

}  // namespace longqa::gateway
