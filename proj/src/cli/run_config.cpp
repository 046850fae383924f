#include "run_config.hpp"

#include <fstream>

namespace longqa::cli {

namespace {

using Json = nlohmann::json;

// Calls `fn(key, value)` per entry; a setting nobody claims is an error.
template <class Fn>
void each_setting(const Json& j, const std::string& where, Fn&& fn) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, v] : j.items()) {
        if (!fn(key, v)) throw ConfigError("unknown setting '" + where + "." + key + "'");
    }
}

std::string_view generation_name(datagen::GenerationMode m) { return m == datagen::GenerationMode::llm ? "llm" : "template"; }

}  // namespace

std::string_view to_string(BackendKind k) noexcept { return k == BackendKind::http ? "http" : "scripted"; }

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http") return BackendKind::http;
    if (s == "scripted") return BackendKind::scripted;
    throw ConfigError("unknown backend '" + std::string(s) + "' (expected http or scripted)");
}

Json RunConfig::to_json() const {
    return {{"backend",
             {{"kind", to_string(backend.kind)},
              {"transcript", backend.transcript},
              {"endpoint", backend.endpoint},
              {"api_key_env", backend.api_key_env},
              {"model", backend.model},
              {"timeout_ms", backend.timeout_ms},
              {"requests_per_minute", backend.requests_per_minute},
              {"max_attempts", backend.max_attempts}}},
            {"token_scheme", token_scheme},
            {"pipeline", pipeline.to_json()},
            {"paths", {{"corpus", corpus}, {"prompts", prompts}, {"output", output}, {"ledger", ledger}}},
            {"parallelism", parallelism},
            {"seed", seed},
            {"datagen",
             {{"count", datagen.count},
              {"single_weight", datagen.single_weight},
              {"generation", generation_name(datagen.generation)},
              {"metrics", datagen.metrics}}},
            {"judge", {{"parse_attempts", judge_parse_attempts}}}};
}

RunConfig RunConfig::from_json(const Json& j) {
    RunConfig c;
    try {
        each_setting(j, "config", [&](const std::string& key, const Json& v) {
            if (key == "backend") {
                each_setting(v, "backend", [&](const std::string& k, const Json& b) {
                    if (k == "kind") c.backend.kind = backend_kind_from_string(b.get<std::string>());
                    else if (k == "transcript") c.backend.transcript = b.get<std::string>();
                    else if (k == "endpoint") c.backend.endpoint = b.get<std::string>();
                    else if (k == "api_key_env") c.backend.api_key_env = b.get<std::string>();
                    else if (k == "model") c.backend.model = b.get<std::string>();
                    else if (k == "timeout_ms") c.backend.timeout_ms = b.get<long>();
                    else if (k == "requests_per_minute") c.backend.requests_per_minute = b.get<double>();
                    else if (k == "max_attempts") c.backend.max_attempts = b.get<int>();
                    else return false;
                    return true;
                });
            } else if (key == "token_scheme") {
                TokenScheme::from_json(v);  // fail early on a bad scheme
                c.token_scheme = v;
            } else if (key == "pipeline") {
                c.pipeline = pai::PipelineConfig::from_json(v);
            } else if (key == "paths") {
                each_setting(v, "paths", [&](const std::string& k, const Json& p) {
                    if (k == "corpus") c.corpus = p.get<std::string>();
                    else if (k == "prompts") c.prompts = p.get<std::string>();
                    else if (k == "output") c.output = p.get<std::string>();
                    else if (k == "ledger") c.ledger = p.get<std::string>();
                    else return false;
                    return true;
                });
            } else if (key == "parallelism") {
                c.parallelism = v.get<std::size_t>();
            } else if (key == "seed") {
                c.seed = v.get<std::uint64_t>();
            } else if (key == "datagen") {
                each_setting(v, "datagen", [&](const std::string& k, const Json& d) {
                    if (k == "count") c.datagen.count = d.get<std::size_t>();
                    else if (k == "single_weight") c.datagen.single_weight = d.get<double>();
                    else if (k == "generation") {
                        const auto g = d.get<std::string>();
                        if (g != "template" && g != "llm") throw ConfigError("datagen.generation must be template or llm");
                        c.datagen.generation = g == "llm" ? datagen::GenerationMode::llm : datagen::GenerationMode::template_text;
                    } else if (k == "metrics") c.datagen.metrics = d.get<std::string>();
                    else return false;
                    return true;
                });
            } else if (key == "judge") {
                each_setting(v, "judge", [&](const std::string& k, const Json& d) {
                    if (k != "parse_attempts") return false;
                    c.judge_parse_attempts = d.get<int>();
                    return true;
                });
            } else {
                return false;
            }
            return true;
        });
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.parallelism == 0) throw ConfigError("parallelism must be at least 1");
    if (c.backend.max_attempts < 1) throw ConfigError("backend.max_attempts must be at least 1");
    if (c.judge_parse_attempts < 1) throw ConfigError("judge.parse_attempts must be at least 1");
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

std::filesystem::path RunConfig::output_path(const std::string& name) const { return std::filesystem::path(output) / name; }

std::filesystem::path RunConfig::ledger_path() const { return ledger.empty() ? output_path("ledger.json") : std::filesystem::path(ledger); }

TokenScheme RunConfig::scheme() const { return TokenScheme::from_json(token_scheme); }

pai::PromptPack RunConfig::prompt_pack() const {
    return prompts.empty() ? pai::PromptPack::defaults() : pai::PromptPack::load(prompts);
}

std::shared_ptr<gateway::Gateway> RunConfig::make_gateway() const {
    const auto s = scheme();
    std::shared_ptr<gateway::Backend> model;
    if (backend.kind == BackendKind::scripted) {
        if (backend.transcript.empty()) throw ConfigError("the scripted backend needs a transcript (--transcript)");
        model = gateway::ScriptedBackend::from_file(backend.transcript, s);
    } else {
        gateway::HttpBackendConfig http;
        http.endpoint = backend.endpoint;
        http.api_key_env = backend.api_key_env;
        http.timeout = std::chrono::milliseconds(backend.timeout_ms);
        model = std::make_shared<gateway::HttpBackend>(http, s);
    }
    gateway::GatewayOptions options;
    options.model = backend.model;
    options.retry.max_attempts = backend.max_attempts;
    options.requests_per_minute = backend.requests_per_minute;
    options.scheme = s;
    return std::make_shared<gateway::Gateway>(std::move(model), std::move(options));
}

pai::Engine RunConfig::make_engine() const { return pai::Engine(make_gateway(), pipeline, prompt_pack(), scheme()); }

}  // namespace longqa::cli
