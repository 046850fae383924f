#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "longqa/gateway/chat.hpp"

namespace longqa::gateway {

struct StageTally {
    std::size_t calls = 0;
    std::size_t input_tokens = 0;
    std::size_t output_tokens = 0;
    std::size_t failed_attempts = 0;  // transmitted attempts that did not succeed

    StageTally& operator+=(const StageTally& o) {
        calls += o.calls;
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        failed_attempts += o.failed_attempts;
        return *this;
    }
    bool operator==(const StageTally&) const = default;
};

// Append-only per-stage token ledger. Safe for concurrent recording.
class TokenAccount {
public:
    TokenAccount() = default;
    TokenAccount(const TokenAccount& other);
    TokenAccount& operator=(const TokenAccount& other);

    // Restores a previously serialized ledger.
    static TokenAccount from_stages(std::map<std::string, StageTally> stages);

    // A successful call.
    void record(std::string_view stage, const Usage& usage);
    // A transmitted attempt that failed; only its input is charged.
    void record_failed_attempt(std::string_view stage, std::size_t input_tokens);
    // Folds another account in, stage by stage.
    void merge(const TokenAccount& other);

    std::map<std::string, StageTally> stages() const;
    StageTally total() const;

    bool operator==(const TokenAccount& other) const { return stages() == other.stages(); }

private:
    mutable std::mutex mutex_;
    std::map<std::string, StageTally> stages_;
};

struct EfficiencyTotals {
    std::size_t total_input_tokens = 0;
    std::size_t total_output_tokens = 0;
    std::size_t total_calls = 0;
    std::map<std::string, StageTally> per_stage;
};

EfficiencyTotals efficiency_totals(const TokenAccount& account);

// {"stages": {"<label>": {"calls", "input_tokens", "output_tokens", "failed_attempts"}}}
nlohmann::json to_json(const TokenAccount& account);
TokenAccount account_from_json(const nlohmann::json& j);

}  // namespace longqa::gateway
