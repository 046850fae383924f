#include "commands.hpp"

#include <CLI11.hpp>
#include <openssl/sha.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "longqa/datagen/corpus.hpp"
#include "longqa/datagen/questions.hpp"
#include "longqa/datagen/samples.hpp"
#include "longqa/eval/judge.hpp"
#include "longqa/eval/metrics.hpp"
#include "longqa/parallel.hpp"
#include "run_config.hpp"

namespace longqa::cli {

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kCredentialNote =
    "Credentials: the http backend reads its API key from the environment variable named by\n"
    "backend.api_key_env in the config file (default OPENAI_API_KEY). There is deliberately no\n"
    "flag for it.\n"
    "Exit codes: 0 ok, 2 config, 3 transport, 4 fixture miss, 5 pipeline.";

// Flag values; unset ones leave the config file (or default) alone.
struct Overrides {
    std::string config;
    std::optional<std::string> backend, transcript, mode, corpus, out, ledger, prompts;
    std::optional<std::size_t> top_k, parallelism;
    std::optional<std::uint64_t> seed;
    bool json = false;
};

RunConfig resolve(const Overrides& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
    if (o.backend) c.backend.kind = backend_kind_from_string(*o.backend);
    if (o.transcript) c.backend.transcript = *o.transcript;
    if (o.mode) c.pipeline.mode = pai::mode_from_string(*o.mode);
    if (o.top_k) c.pipeline.rag_top_k = *o.top_k;
    if (o.parallelism) {
        if (*o.parallelism == 0) throw ConfigError("--parallelism must be at least 1");
        c.parallelism = *o.parallelism;
        c.pipeline.relevance_parallelism = *o.parallelism;
    }
    if (o.seed) c.seed = *o.seed;
    if (o.corpus) c.corpus = *o.corpus;
    if (o.out) c.output = *o.out;
    if (o.ledger) c.ledger = *o.ledger;
    if (o.prompts) c.prompts = *o.prompts;
    c.pipeline.validate();
    return c;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    std::string hex;
    char buf[3];
    for (const auto b : digest) {
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

// Same inputs and config, same id; re-runs overwrite their own ledger entry.
std::string run_id_for(const Json& identity) { return sha256_hex(identity.dump()).substr(0, 16); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("failed writing " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void upsert_ledger(const RunConfig& cfg, const std::string& run_id, Json entry) {
    const fs::path path = cfg.ledger_path();
    Json ledger = {{"runs", Json::object()}};
    if (fs::exists(path)) {
        ledger = read_json_file(path);
        if (!ledger.is_object() || !ledger.contains("runs") || !ledger["runs"].is_object()) {
            throw FormatError(path.string() + ": not a run ledger");
        }
    }
    ledger["runs"][run_id] = std::move(entry);
    write_json(path, ledger);
}

Json totals_json(const gateway::TokenAccount& account) {
    const auto t = account.total();
    return {{"calls", t.calls}, {"input_tokens", t.input_tokens}, {"output_tokens", t.output_tokens}};
}

Json ledger_entry(std::string command, const gateway::TokenAccount& account, Json extra) {
    Json e = {{"command", std::move(command)}, {"account", gateway::to_json(account)}, {"totals", totals_json(account)}};
    for (auto& [k, v] : extra.items()) e[k] = v;
    return e;
}

std::vector<Document> load_corpus(const RunConfig& cfg) {
    if (cfg.corpus.empty()) throw ConfigError("no corpus given (--corpus or paths.corpus)");
    return datagen::read_corpus(cfg.corpus);
}

template <class T, class Fn>
std::vector<T> read_rows(const fs::path& path, Fn&& parse) {
    std::vector<T> out;
    datagen::read_jsonl(path, [&](const Json& j) { out.push_back(parse(j)); });
    return out;
}

void emit(std::ostream& out, const Json& j) { out << j.dump(2) << "\n"; }

// --- answer ------------------------------------------------------------------

int cmd_answer(const RunConfig& cfg, bool json, const std::string& question, const std::vector<std::string>& ids,
               std::ostream& out, std::ostream& err) {
    const auto corpus = load_corpus(cfg);
    std::vector<Document> docs;
    if (ids.empty()) {
        docs = corpus;
    } else {
        for (const auto& id : ids) docs.push_back(datagen::find_document(corpus, id));
    }
    std::vector<std::string> doc_ids;
    for (const auto& d : docs) doc_ids.push_back(d.id);

    const Json identity = {{"command", "answer"}, {"question", question}, {"doc_ids", doc_ids}, {"config", cfg.to_json()}};
    const std::string run_id = run_id_for(identity);
    const std::string mode(pai::to_string(cfg.pipeline.mode));
    const auto engine = cfg.make_engine();

    pai::ReasoningTrace trace;
    std::optional<pai::RunError> failure;
    try {
        trace = engine.run(question, docs);
    } catch (const pai::RunError& e) {
        failure = e;
        trace = e.partial();
    }
    Json result = {{"run_id", run_id},
                   {"command", "answer"},
                   {"mode", mode},
                   {"question", question},
                   {"doc_ids", doc_ids},
                   {"status", failure ? std::string("error: ") + failure->what() : std::string("ok")},
                   {"trace", pai::to_json(trace)},
                   {"config", cfg.to_json()}};
    write_json(cfg.output_path("answer-" + run_id + ".json"), result);
    if (!failure) write_text(cfg.output_path("answer-" + run_id + ".txt"), pai::render_trace(trace));
    upsert_ledger(cfg, run_id,
                  ledger_entry("answer", trace.account,
                               {{"mode", mode}, {"question", question}, {"doc_ids", doc_ids}, {"status", result["status"]}}));
    if (failure) throw *failure;

    if (json) {
        emit(out, result);
    } else {
        out << pai::render_trace(trace) << "\n";
    }
    const auto t = trace.account.total();
    err << "run " << run_id << " (" << mode << "): " << t.calls << " calls, " << t.input_tokens << " input tokens; wrote "
        << cfg.output_path("answer-" + run_id + ".json").string() << "\n";
    return 0;
}

// --- datagen -----------------------------------------------------------------

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

std::string input_id(const std::string& input) {
    std::string name = input;
    if (is_url(name)) {
        name = name.substr(0, name.find_first_of("?#"));
        while (!name.empty() && name.back() == '/') name.pop_back();
    }
    return fs::path(name).stem().string();
}

int cmd_ingest(const RunConfig& cfg, const std::vector<std::string>& inputs, bool html, const std::string& meta_path,
               std::ostream& out, std::ostream& err) {
    if (inputs.empty()) throw ConfigError("datagen ingest needs at least one input");
    const auto scheme = cfg.scheme();
    std::set<std::string> ids;
    for (const auto& in : inputs) {
        if (!ids.insert(input_id(in)).second) throw ConfigError("two inputs map to document id '" + input_id(in) + "'");
    }
    std::vector<datagen::IngestResult> results(inputs.size());
    parallel_for(inputs.size(), cfg.parallelism, [&](std::size_t i) {
        const std::string& in = inputs[i];
        fs::path sidecar = in + ".meta.json";
        if (is_url(in) || !fs::exists(sidecar)) {
            if (meta_path.empty()) throw ConfigError("no metadata for " + in + " (add " + in + ".meta.json or --meta)");
            sidecar = meta_path;
        }
        auto meta = datagen::metadata_from_json(read_json_file(sidecar));
        if (is_url(in)) {
            results[i] = datagen::ingest_url(in, input_id(in), std::move(meta), scheme);
            return;
        }
        std::ifstream f(in, std::ios::binary);
        if (!f) throw ConfigError("cannot open " + in);
        std::ostringstream raw;
        raw << f.rdbuf();
        if (meta.source.empty()) meta.source = fs::path(in).filename().string();
        const auto ext = fs::path(in).extension().string();
        results[i] = datagen::ingest_report(raw.str(), input_id(in), std::move(meta), scheme,
                                            html || ext == ".html" || ext == ".htm");
    });

    std::vector<Document> accepted;
    std::vector<Json> rejected;
    for (std::size_t i = 0; i < results.size(); ++i) {
        auto& r = results[i];
        if (r.accepted()) {
            accepted.push_back(std::move(*r.document));
        } else {
            rejected.push_back({{"id", r.id}, {"input", inputs[i]}, {"token_count", r.token_count}, {"reason", r.reason}});
        }
    }
    datagen::write_corpus(cfg.output_path("corpus.jsonl"), accepted);
    datagen::write_jsonl(cfg.output_path("rejections.jsonl"), rejected);
    err << "ingested " << accepted.size() << " of " << inputs.size() << " reports\n";
    emit(out, {{"command", "datagen ingest"},
               {"accepted", accepted.size()},
               {"rejected", rejected.size()},
               {"rejections", rejected},
               {"corpus", cfg.output_path("corpus.jsonl").string()},
               {"config", cfg.to_json()}});
    return 0;
}

datagen::MetricPool metric_pool(const RunConfig& cfg) {
    return cfg.datagen.metrics.empty() ? datagen::MetricPool::finance_default()
                                       : datagen::MetricPool::from_json(read_json_file(cfg.datagen.metrics));
}

int cmd_questions(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto corpus = load_corpus(cfg);
    datagen::QuestionBatchConfig qc;
    qc.count = cfg.datagen.count;
    qc.seed = cfg.seed;
    qc.single_weight = cfg.datagen.single_weight;
    qc.mode = cfg.datagen.generation;
    const auto pool = metric_pool(cfg);
    const auto prompts = cfg.prompt_pack();
    gateway::TokenAccount account;
    std::shared_ptr<gateway::Gateway> gw;
    if (qc.mode == datagen::GenerationMode::llm) gw = cfg.make_gateway();
    const auto batch = datagen::generate_questions(corpus, pool, qc, gw.get(), &prompts, &account);

    std::vector<Json> acc, rej;
    for (const auto& q : batch.accepted) acc.push_back(datagen::to_json(q));
    for (const auto& q : batch.rejected) rej.push_back(datagen::to_json(q));
    datagen::write_jsonl(cfg.output_path("questions.jsonl"), acc);
    datagen::write_jsonl(cfg.output_path("questions_rejected.jsonl"), rej);
    if (gw) {
        const Json identity = {{"command", "datagen questions"}, {"config", cfg.to_json()}};
        upsert_ledger(cfg, run_id_for(identity), ledger_entry("datagen questions", account, Json::object()));
    }
    const auto stats = datagen::dataset_stats(datagen::stats_rows(batch.accepted));
    err << "generated " << batch.accepted.size() << " questions (" << batch.rejected.size()
        << " over the combined-token ceiling)\n";
    emit(out, {{"command", "datagen questions"},
               {"accepted", batch.accepted.size()},
               {"rejected", batch.rejected.size()},
               {"single_ratio", stats.single_ratio},
               {"per_qtype", stats.per_qtype},
               {"questions", cfg.output_path("questions.jsonl").string()},
               {"config", cfg.to_json()}});
    return 0;
}

int cmd_augment(const RunConfig& cfg, const std::string& questions_path, std::ostream& out, std::ostream& err) {
    const auto corpus = load_corpus(cfg);
    const fs::path qpath = questions_path.empty() ? cfg.output_path("questions.jsonl") : fs::path(questions_path);
    const auto questions = read_rows<datagen::QuestionRecord>(qpath, datagen::question_from_json);
    const auto engine = cfg.make_engine();
    const auto batch = datagen::augment_all(questions, corpus, engine, cfg.parallelism);

    gateway::TokenAccount account;
    std::vector<Json> dataset, training, failures;
    for (const auto& s : batch.samples) {
        account.merge(s.trace.account);
        dataset.push_back(datagen::to_json(s));
        training.push_back(datagen::to_json(datagen::build_training_sample(s, corpus)));
    }
    for (const auto& f : batch.failures) {
        failures.push_back({{"id", f.id}, {"exit_code", exit_code(f.kind)}, {"error", f.message}});
    }
    datagen::write_jsonl(cfg.output_path("dataset.jsonl"), dataset);
    datagen::write_jsonl(cfg.output_path("training.jsonl"), training);
    datagen::write_jsonl(cfg.output_path("augment_failures.jsonl"), failures);
    const Json identity = {{"command", "datagen augment"}, {"questions", qpath.string()}, {"config", cfg.to_json()}};
    const auto run_id = run_id_for(identity);
    upsert_ledger(cfg, run_id,
                  ledger_entry("datagen augment", account,
                               {{"mode", pai::to_string(cfg.pipeline.mode)},
                                {"samples", batch.samples.size()},
                                {"failures", batch.failures.size()}}));
    err << "augmented " << batch.samples.size() << " of " << questions.size() << " questions, " << batch.failures.size()
        << " failed\n";
    emit(out, {{"command", "datagen augment"},
               {"run_id", run_id},
               {"samples", batch.samples.size()},
               {"failures", batch.failures.size()},
               {"totals", totals_json(account)},
               {"dataset", cfg.output_path("dataset.jsonl").string()},
               {"config", cfg.to_json()}});
    return 0;
}

int cmd_stats(const RunConfig& cfg, const std::string& dataset_path, const std::string& questions_path,
              std::ostream& out, std::ostream& err) {
    if (!dataset_path.empty() && !questions_path.empty()) throw ConfigError("give --dataset or --questions, not both");
    std::vector<datagen::StatsRow> rows;
    std::string source;
    if (!questions_path.empty()) {
        source = questions_path;
        rows = datagen::stats_rows(read_rows<datagen::QuestionRecord>(questions_path, datagen::question_from_json));
    } else {
        source = dataset_path.empty() ? cfg.output_path("dataset.jsonl").string() : dataset_path;
        rows = datagen::stats_rows(read_rows<datagen::AugmentedSample>(source, datagen::sample_from_json), cfg.scheme());
    }
    const auto stats = datagen::dataset_stats(rows);
    Json report = datagen::to_json(stats);
    report["source"] = source;
    write_json(cfg.output_path("stats.json"), report);
    write_text(cfg.output_path("histograms.csv"), datagen::histograms_csv(stats));
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.1f%%", stats.single_ratio * 100);
    err << "single-source " << pct << " (" << stats.single_source << "/" << stats.samples << ")\n";
    emit(out, report);
    return 0;
}

// --- eval --------------------------------------------------------------------

int cmd_judge(const RunConfig& cfg, const std::string& predictions, std::ostream& out, std::ostream& err) {
    if (predictions.empty()) throw ConfigError("eval judge needs --predictions");
    const auto records = eval::read_predictions(predictions);
    const auto gw = cfg.make_gateway();
    gateway::TokenAccount account;
    eval::JudgeOptions options;
    options.parse_attempts = cfg.judge_parse_attempts;
    const auto outcomes = eval::judge_all(records, *gw, cfg.prompt_pack(), account, cfg.parallelism, options);
    const auto report = eval::score_report(outcomes, records);
    Json j = eval::to_json(report);
    j["config"] = cfg.to_json();
    write_json(cfg.output_path("judge_report.json"), j);
    write_text(cfg.output_path("judge_report.csv"), eval::to_csv(report));
    const Json identity = {{"command", "eval judge"}, {"predictions", predictions}, {"config", cfg.to_json()}};
    upsert_ledger(cfg, run_id_for(identity), ledger_entry("eval judge", account, {{"scored", report.overall.n}}));
    char line[96];
    std::snprintf(line, sizeof line, "AS %.2f  PR %.2f  n %zu  excluded %zu\n", report.overall.avg_score,
                  report.overall.perfect_rate, report.overall.n, report.excluded);
    err << line;
    emit(out, {{"command", "eval judge"},
               {"n", report.overall.n},
               {"excluded", report.excluded},
               {"avg_score", report.overall.avg_score},
               {"perfect_rate", report.overall.perfect_rate},
               {"task_weighted", j["task_weighted"]},
               {"report", cfg.output_path("judge_report.json").string()}});
    return 0;
}

int cmd_f1(const RunConfig& cfg, const std::string& predictions, const std::string& language, std::ostream& out,
           std::ostream& err) {
    if (predictions.empty()) throw ConfigError("eval f1 needs --predictions");
    std::optional<Language> lang;
    if (!language.empty()) lang = language_from_string(language);
    const auto report = eval::f1_report(eval::read_predictions(predictions), lang);
    Json j = eval::to_json(report);
    j["config"] = cfg.to_json();
    write_json(cfg.output_path("f1_report.json"), j);
    char line[64];
    std::snprintf(line, sizeof line, "mean F1 %.4f over %zu rows\n", report.mean_f1, report.n);
    err << line;
    emit(out, {{"command", "eval f1"},
               {"n", report.n},
               {"mean_f1", report.mean_f1},
               {"per_qtype", report.per_qtype},
               {"per_bucket", report.per_bucket},
               {"report", cfg.output_path("f1_report.json").string()}});
    return 0;
}

int cmd_efficiency(const RunConfig& cfg, const std::vector<std::string>& ledgers, std::ostream& out, std::ostream& err) {
    if (ledgers.size() < 2) throw ConfigError("eval efficiency needs at least two ledgers");
    std::map<std::string, gateway::TokenAccount> accounts;
    for (const auto& arg : ledgers) {
        const auto eq = arg.find('=');
        const std::string label = eq == std::string::npos ? fs::path(arg).stem().string() : arg.substr(0, eq);
        const fs::path path = eq == std::string::npos ? fs::path(arg) : fs::path(arg.substr(eq + 1));
        if (accounts.count(label)) throw ConfigError("duplicate ledger label '" + label + "' (use label=path)");
        const Json ledger = read_json_file(path);
        if (!ledger.contains("runs") || !ledger["runs"].is_object()) throw FormatError(path.string() + ": not a run ledger");
        gateway::TokenAccount merged;
        for (const auto& [_, run] : ledger["runs"].items()) merged.merge(gateway::account_from_json(run.at("account")));
        accounts.emplace(label, std::move(merged));
    }
    const auto report = eval::efficiency_report(accounts);
    Json j = eval::to_json(report);
    write_json(cfg.output_path("efficiency_report.json"), j);
    err << eval::ratio_table(report);
    emit(out, j);
    return 0;
}

class StderrLogger {
public:
    explicit StderrLogger(std::ostream& err) : previous_(spdlog::default_logger()) {
        auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
        auto logger = std::make_shared<spdlog::logger>("longqa", sink);
        logger->set_pattern("%l: %v");
        spdlog::set_default_logger(logger);
    }
    ~StderrLogger() { spdlog::set_default_logger(previous_); }

private:
    std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    StderrLogger logging(err);

    CLI::App app{"Long-context question answering: property-driven inference, data generation, evaluation.", "longqa"};
    app.footer(kCredentialNote);
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, "JSON run config (see README)")->check(CLI::ExistingFile);
    app.add_option("--backend", o.backend, "model backend")->check(CLI::IsMember({"http", "scripted"}));
    app.add_option("--transcript", o.transcript, "JSONL transcript for the scripted backend");
    app.add_option("--mode", o.mode, "pipeline mode")->check(CLI::IsMember({"pai", "pai-minus", "pai_minus", "rag", "direct"}));
    app.add_option("--top-k", o.top_k, "chunks kept by the rag baseline (default 50)");
    app.add_option("--seed", o.seed, "seed for question sampling");
    app.add_option("--parallelism", o.parallelism, "bound on concurrent model calls per fan-out");
    app.add_flag("--json", o.json, "print the answer result as JSON instead of the rendered trace");
    app.add_option("--corpus", o.corpus, "corpus JSONL");
    app.add_option("--out", o.out, "output directory (default out)");
    app.add_option("--ledger", o.ledger, "run ledger path (default <out>/ledger.json)");
    app.add_option("--prompts", o.prompts, "prompt pack JSON overriding built-in prompts");

    std::string question, run_id;
    std::vector<std::string> doc_ids;
    auto* answer = app.add_subcommand("answer", "answer a question over corpus documents");
    answer->add_option("question", question, "the question")->required();
    answer->add_option("doc_ids", doc_ids, "documents to read (default: the whole corpus)");

    auto* datagen = app.add_subcommand("datagen", "build question and reasoning datasets");
    datagen->require_subcommand(1);
    std::vector<std::string> inputs;
    bool html = false;
    std::string meta_path;
    auto* ingest = datagen->add_subcommand("ingest", "turn raw reports into a corpus, applying the 20K-80K window");
    ingest->add_option("inputs", inputs, "report files (with <file>.meta.json sidecars) or URLs")->required();
    ingest->add_flag("--html", html, "strip HTML from every input");
    ingest->add_option("--meta", meta_path, "metadata JSON for inputs without a sidecar");

    std::optional<std::size_t> count;
    std::optional<double> single_weight;
    std::optional<std::string> metrics, generation;
    auto* questions = datagen->add_subcommand("questions", "sample questions from the corpus catalog");
    questions->add_option("--count", count, "questions to draw (default 100)");
    questions->add_option("--single-weight", single_weight, "probability of a single-source question (default 0.456)");
    questions->add_option("--metrics", metrics, "metric pool JSON {domain, metrics}");
    questions->add_option("--generation", generation, "question wording")->check(CLI::IsMember({"template", "llm"}));

    std::string questions_path, dataset_path;
    auto* augment = datagen->add_subcommand("augment", "answer questions with reasoning traces");
    augment->add_option("--questions", questions_path, "questions JSONL (default <out>/questions.jsonl)");
    auto* stats = datagen->add_subcommand("stats", "dataset statistics and histograms");
    stats->add_option("--dataset", dataset_path, "dataset JSONL (default <out>/dataset.jsonl)");
    stats->add_option("--questions", questions_path, "questions JSONL, for type mix only");

    auto* evalc = app.add_subcommand("eval", "score predictions and compare token budgets");
    evalc->require_subcommand(1);
    std::string predictions, language;
    std::vector<std::string> ledgers;
    auto* judge = evalc->add_subcommand("judge", "model-graded average score and perfect rate");
    judge->add_option("--predictions", predictions, "predictions JSONL {id, question, reference, prediction}")->required();
    auto* f1 = evalc->add_subcommand("f1", "token-level F1");
    f1->add_option("--predictions", predictions, "predictions JSONL")->required();
    f1->add_option("--language", language, "override per-row language")->check(CLI::IsMember({"en", "zh"}));
    auto* efficiency = evalc->add_subcommand("efficiency", "token totals and ratios across run ledgers");
    efficiency->add_option("ledgers", ledgers, "ledger files, optionally label=path")->required();

    auto* config = app.add_subcommand("config", "print the resolved config");

    std::vector<std::string> argv_store = {"longqa"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : exit_code(ErrorKind::config);
    }

    try {
        RunConfig cfg = resolve(o);
        if (count) cfg.datagen.count = *count;
        if (single_weight) cfg.datagen.single_weight = *single_weight;
        if (metrics) cfg.datagen.metrics = *metrics;
        if (generation) {
            cfg.datagen.generation = *generation == "llm" ? datagen::GenerationMode::llm : datagen::GenerationMode::template_text;
        }

        if (*answer) return cmd_answer(cfg, o.json, question, doc_ids, out, err);
        if (*ingest) return cmd_ingest(cfg, inputs, html, meta_path, out, err);
        if (*questions) return cmd_questions(cfg, out, err);
        if (*augment) return cmd_augment(cfg, questions_path, out, err);
        if (*stats) return cmd_stats(cfg, dataset_path, questions_path, out, err);
        if (*judge) return cmd_judge(cfg, predictions, out, err);
        if (*f1) return cmd_f1(cfg, predictions, language, out, err);
        if (*efficiency) return cmd_efficiency(cfg, ledgers, out, err);
        if (*config) {
            emit(out, cfg.to_json());
            return 0;
        }
        return exit_code(ErrorKind::config);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(ErrorKind::pipeline);
    }
}

}  // namespace longqa::cli
