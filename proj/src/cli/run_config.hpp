#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "longqa/datagen/questions.hpp"
#include "longqa/gateway/gateway.hpp"
#include "longqa/pai/engine.hpp"

namespace longqa::cli {

enum class BackendKind { http, scripted };

struct BackendSettings {
    BackendKind kind = BackendKind::http;
    std::string transcript;  // scripted only
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "OPENAI_API_KEY";  // the key itself never appears in config or flags
    std::string model = "gpt-4o-mini";
    long timeout_ms = 60'000;
    double requests_per_minute = 0;
    int max_attempts = 5;
};

struct DatagenSettings {
    std::size_t count = 100;
    double single_weight = 0.456;
    datagen::GenerationMode generation = datagen::GenerationMode::template_text;
    std::string metrics;  // MetricPool JSON file; empty means the finance default
};

// Everything a command needs, after defaults < config file < flags.
struct RunConfig {
    BackendSettings backend;
    nlohmann::json token_scheme = {{"kind", "heuristic"}, {"bytes_per_token", 4}};
    pai::PipelineConfig pipeline;
    std::string corpus;
    std::string prompts;  // prompt pack JSON; empty means built-in
    std::string output = "out";
    std::string ledger;   // empty means <output>/ledger.json
    std::size_t parallelism = 8;
    std::uint64_t seed = 0;
    DatagenSettings datagen;
    int judge_parse_attempts = 2;

    nlohmann::json to_json() const;
    // Unknown keys are errors; absent keys keep their defaults.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);

    std::filesystem::path output_path(const std::string& name) const;
    std::filesystem::path ledger_path() const;

    TokenScheme scheme() const;
    pai::PromptPack prompt_pack() const;
    std::shared_ptr<gateway::Gateway> make_gateway() const;
    pai::Engine make_engine() const;
};

std::string_view to_string(BackendKind k) noexcept;
BackendKind backend_kind_from_string(std::string_view s);

}  // namespace longqa::cli
