#include "longqa/pai/engine.hpp"

#include <algorithm>
#include <tuple>

#include <spdlog/spdlog.h>

#include "longqa/parallel.hpp"

namespace longqa::pai {

using gateway::TokenAccount;

namespace {

std::string subject_list(const std::vector<Document>& docs) {
    std::string out;
    for (const auto& d : docs) {
        if (!out.empty()) out += '\n';
        out += "- " + d.title();
    }
    return out;
}

std::string response_text(const gateway::ChatResponse& r) {
    return r.text ? normalize_whitespace(*r.text) : std::string();
}

bool chunk_order(const Chunk* a, const Chunk* b) {
    return std::tie(a->doc_id, a->index) < std::tie(b->doc_id, b->index);
}

gateway::ChatRequest with_tool(gateway::ChatRequest req, gateway::FunctionSchema schema) {
    req.tool_choice = schema.name;
    req.tools.push_back(std::move(schema));
    return req;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
    switch (mode) {
        case Mode::pai: return "pai";
        case Mode::pai_minus: return "pai_minus";
        case Mode::rag: return "rag";
        case Mode::direct: return "direct";
    }
    return "pai";
}

Mode mode_from_string(std::string_view s) {
    if (s == "pai") return Mode::pai;
    if (s == "pai_minus" || s == "pai-minus") return Mode::pai_minus;
    if (s == "rag") return Mode::rag;
    if (s == "direct") return Mode::direct;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected pai, pai-minus, rag or direct)");
}

void PipelineConfig::validate() const {
    if (chunk_budget < 1) throw ConfigError("chunk_budget must be at least 1");
    if (rag_top_k < 1) throw ConfigError("rag_top_k must be at least 1");
    if (relevance_parallelism < 1) throw ConfigError("relevance_parallelism must be at least 1");
    if (context_budget < 1) throw ConfigError("context_budget must be at least 1");
}

nlohmann::json PipelineConfig::to_json() const {
    return {{"mode", to_string(mode)},
            {"chunk_budget", chunk_budget},
            {"relevance_parallelism", relevance_parallelism},
            {"rag_top_k", rag_top_k},
            {"domain", to_string(domain)},
            {"context_budget", context_budget},
            {"answer_with_query", answer_with_query}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("pipeline config must be an object");
    PipelineConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "mode") c.mode = mode_from_string(v.get<std::string>());
            else if (key == "chunk_budget") c.chunk_budget = v.get<std::size_t>();
            else if (key == "relevance_parallelism") c.relevance_parallelism = v.get<std::size_t>();
            else if (key == "rag_top_k") c.rag_top_k = v.get<std::size_t>();
            else if (key == "domain") c.domain = domain_from_string(v.get<std::string>());
            else if (key == "context_budget") c.context_budget = v.get<std::size_t>();
            else if (key == "answer_with_query") c.answer_with_query = v.get<bool>();
            else throw ConfigError("unknown pipeline setting '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string chunk_label(const Chunk& chunk, const std::vector<Document>& docs) {
    const auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.id == chunk.doc_id; });
    const std::string title = it == docs.end() ? chunk.doc_id : it->title();
    return title + ", part " + std::to_string(chunk.index);
}

Engine::Engine(std::shared_ptr<const gateway::Gateway> gateway, PipelineConfig config, PromptPack prompts,
               TokenScheme scheme, std::shared_ptr<const Retriever> retriever)
    : gateway_(std::move(gateway)),
      config_(config),
      prompts_(std::move(prompts)),
      scheme_(std::move(scheme)),
      retriever_(retriever ? std::move(retriever) : std::make_shared<LexicalRetriever>()) {
    if (!gateway_) throw ConfigError("engine needs a gateway");
    config_.validate();
}

std::vector<Property> Engine::extract_properties(std::string_view query, const std::vector<Document>& docs,
                                                 TokenAccount& account) const {
    if (normalize_whitespace(query).empty()) throw PipelineError("query is empty");
    auto [system, user] = prompts_.render("extraction", {{"query", std::string(query)}, {"subjects", subject_list(docs)}});
    const auto req = with_tool(gateway_->make_request(system, user), extract_properties_schema(config_.domain));
    const auto args = gateway_->call_function(req, kStageExtraction, account);

    std::vector<Property> props;
    for (const auto& item : args.at("properties")) {
        props.push_back(Property::make(item.at("metric").get<std::string>(), item.at("subject").get<std::string>()));
    }
    props = deduplicate(props);
    if (props.empty()) throw EmptyExtractionError("no properties were extracted from the query");
    return props;
}

std::vector<SubQuery> Engine::generate_sub_questions_direct(std::string_view query, const std::vector<Document>& docs,
                                                            TokenAccount& account) const {
    if (normalize_whitespace(query).empty()) throw PipelineError("query is empty");
    auto [system, user] =
        prompts_.render("sub_questions", {{"query", std::string(query)}, {"subjects", subject_list(docs)}});
    const auto req = with_tool(gateway_->make_request(system, user), sub_questions_schema());
    const auto args = gateway_->call_function(req, kStageExtraction, account);

    std::vector<SubQuery> out;
    for (const auto& q : args.at("sub_questions")) {
        std::string text = normalize_whitespace(q.get<std::string>());
        if (!text.empty()) out.push_back({std::nullopt, std::move(text)});
    }
    if (out.empty()) throw EmptyExtractionError("no sub-questions were generated");
    return out;
}

bool Engine::judge_chunk_relevance(const SubQuery& sq, const Chunk& chunk, TokenAccount& account) const {
    auto [system, user] = prompts_.render(
        "relevance",
        {{"sub_query", sq.text}, {"chunk_label", chunk.doc_id + "#" + std::to_string(chunk.index)}, {"chunk", chunk.text}});
    const auto req = with_tool(gateway_->make_request(system, user), relevance_schema());
    try {
        return gateway_->call_function(req, kStageRetrieval, account).at("relevant").get<bool>();
    } catch (const gateway::TransportError& e) {
        spdlog::warn("relevance of {}#{} undecided ({}); treating as not relevant", chunk.doc_id, chunk.index, e.what());
    } catch (const gateway::ProtocolError& e) {
        spdlog::warn("relevance of {}#{} undecided ({}); treating as not relevant", chunk.doc_id, chunk.index, e.what());
    } catch (const gateway::ExtractionError& e) {
        spdlog::warn("relevance of {}#{} undecided ({}); treating as not relevant", chunk.doc_id, chunk.index, e.what());
    } catch (const gateway::ValidationError& e) {
        spdlog::warn("relevance of {}#{} undecided ({}); treating as not relevant", chunk.doc_id, chunk.index, e.what());
    }
    return false;
}

std::string Engine::pack(const std::vector<const Chunk*>& chunks, const std::vector<Document>& docs,
                         std::size_t overhead) const {
    const std::size_t budget = config_.context_budget > overhead ? config_.context_budget - overhead : 0;
    std::string out;
    std::size_t used = 0;
    std::size_t kept = 0;
    for (const Chunk* c : chunks) {
        std::string block = "[" + chunk_label(*c, docs) + "]\n" + c->text;
        const std::size_t cost = scheme_.count(block) + 1;
        if (used + cost > budget) break;
        if (!out.empty()) out += "\n\n";
        out += block;
        used += cost;
        ++kept;
    }
    if (kept < chunks.size()) {
        spdlog::warn("packed prompt over the {}-token context budget; dropped {} of {} chunks from the tail",
                     config_.context_budget, chunks.size() - kept, chunks.size());
    }
    return out;
}

Finding Engine::answer_sub_query(const SubQuery& sq, std::string_view query, const std::vector<const Chunk*>& relevant,
                                 const std::vector<Document>& docs, TokenAccount& account) const {
    Finding f;
    f.sub_query = sq;
    for (const Chunk* c : relevant) f.relevant_chunks.push_back({c->doc_id, c->index});
    if (relevant.empty()) {
        f.sub_answer = std::string(kNoEvidence);
        return f;
    }
    const std::string_view name = config_.answer_with_query ? "answer_with_query" : "answer";
    std::map<std::string, std::string> slots = {{"sub_query", sq.text}, {"context", ""}};
    if (config_.answer_with_query) slots["query"] = std::string(query);
    {
        const auto [s, u] = prompts_.render(name, slots);
        slots["context"] = pack(relevant, docs, scheme_.count(s) + scheme_.count(u));
    }
    auto [system, user] = prompts_.render(name, slots);
    const auto resp = gateway_->send_chat(gateway_->make_request(system, user), kStageAnswering, account);
    f.sub_answer = response_text(resp);
    if (f.sub_answer.empty()) throw PipelineError("empty sub-answer for: " + sq.text);
    return f;
}

std::string Engine::summarize(std::string_view query, const std::vector<Finding>& findings,
                              TokenAccount& account) const {
    if (findings.empty()) throw PipelineError("nothing to summarize");
    std::string lines;
    for (const auto& f : findings) {
        if (!lines.empty()) lines += '\n';
        if (f.sub_query.property) {
            lines += finding_line(&*f.sub_query.property, f.sub_answer);
        } else {
            lines += f.sub_query.text + ' ' + normalize_whitespace(f.sub_answer);
        }
    }
    auto [system, user] = prompts_.render("summarize", {{"query", std::string(query)}, {"findings", lines}});
    const auto resp = gateway_->send_chat(gateway_->make_request(system, user), kStageSummarization, account);
    std::string conclusion = response_text(resp);
    if (conclusion.empty()) throw PipelineError("summarization returned no text");
    return conclusion;
}

std::vector<Chunk> Engine::chunk_pool(const std::vector<Document>& docs) const {
    std::vector<Chunk> pool;
    for (const auto& d : docs) {
        auto chunks = chunk_document(d, config_.chunk_budget, scheme_);
        pool.insert(pool.end(), std::make_move_iterator(chunks.begin()), std::make_move_iterator(chunks.end()));
    }
    return pool;
}

namespace {

// Runs `body`, rethrowing any failure as RunError with the trace so far.
template <class Body>
ReasoningTrace guarded(ReasoningTrace trace, Body&& body) {
    try {
        body(trace);
    } catch (const RunError&) {
        throw;
    } catch (const Error& e) {
        throw RunError(e.kind(), e.what(), std::move(trace));
    } catch (const std::exception& e) {
        throw RunError(ErrorKind::pipeline, e.what(), std::move(trace));
    }
    return trace;
}

}  // namespace

ReasoningTrace Engine::run_pai(std::string_view query, const std::vector<Document>& docs) const {
    ReasoningTrace start;
    start.query = std::string(query);
    return guarded(std::move(start), [&](ReasoningTrace& trace) {
        if (docs.empty()) throw PipelineError("no documents to answer from");
        std::vector<SubQuery> subs;
        if (config_.mode == Mode::pai_minus) {
            subs = generate_sub_questions_direct(query, docs, trace.account);
        } else {
            trace.properties = extract_properties(query, docs, trace.account);
            for (const auto& p : trace.properties) subs.push_back(render_sub_query(p));
        }

        const std::vector<Chunk> pool = chunk_pool(docs);
        const std::size_t d = pool.size();
        std::vector<char> verdicts(subs.size() * d, 0);
        parallel_for(verdicts.size(), config_.relevance_parallelism, [&](std::size_t i) {
            verdicts[i] = judge_chunk_relevance(subs[i / d], pool[i % d], trace.account) ? 1 : 0;
        });

        for (std::size_t k = 0; k < subs.size(); ++k) {
            std::vector<const Chunk*> relevant;
            for (std::size_t j = 0; j < d; ++j) {
                if (verdicts[k * d + j]) relevant.push_back(&pool[j]);
            }
            std::sort(relevant.begin(), relevant.end(), chunk_order);
            trace.findings.push_back(answer_sub_query(subs[k], query, relevant, docs, trace.account));
        }
        trace.conclusion = summarize(query, trace.findings, trace.account);
    });
}

ReasoningTrace Engine::run_rag_baseline(std::string_view query, const std::vector<Document>& docs) const {
    ReasoningTrace start;
    start.query = std::string(query);
    return guarded(std::move(start), [&](ReasoningTrace& trace) {
        if (docs.empty()) throw PipelineError("no documents to answer from");
        const std::vector<Chunk> pool = chunk_pool(docs);
        const auto picked = top_k(retriever_->score(query, pool), pool, config_.rag_top_k);
        std::vector<const Chunk*> chunks;
        for (const auto i : picked) chunks.push_back(&pool[i]);

        std::map<std::string, std::string> slots = {{"query", std::string(query)}, {"context", ""}};
        {
            const auto [s, u] = prompts_.render("rag", slots);
            slots["context"] = pack(chunks, docs, scheme_.count(s) + scheme_.count(u));
        }
        auto [system, user] = prompts_.render("rag", slots);
        const auto resp = gateway_->send_chat(gateway_->make_request(system, user), kStageAnswering, trace.account);
        trace.conclusion = response_text(resp);
        if (trace.conclusion.empty()) throw PipelineError("model returned no answer");
    });
}

ReasoningTrace Engine::run_direct(std::string_view query, const std::vector<Document>& docs) const {
    ReasoningTrace start;
    start.query = std::string(query);
    return guarded(std::move(start), [&](ReasoningTrace& trace) {
        if (docs.empty()) throw PipelineError("no documents to answer from");
        const std::vector<Chunk> pool = chunk_pool(docs);
        std::vector<const Chunk*> chunks;
        for (const auto& c : pool) chunks.push_back(&c);

        std::map<std::string, std::string> slots = {{"query", std::string(query)}, {"context", ""}};
        {
            const auto [s, u] = prompts_.render("direct", slots);
            slots["context"] = pack(chunks, docs, scheme_.count(s) + scheme_.count(u));
        }
        auto [system, user] = prompts_.render("direct", slots);
        const auto resp = gateway_->send_chat(gateway_->make_request(system, user), kStageAnswering, trace.account);
        trace.conclusion = response_text(resp);
        if (trace.conclusion.empty()) throw PipelineError("model returned no answer");
    });
}

ReasoningTrace Engine::run(std::string_view query, const std::vector<Document>& docs) const {
    switch (config_.mode) {
        case Mode::rag: return run_rag_baseline(query, docs);
        case Mode::direct: return run_direct(query, docs);
        default: return run_pai(query, docs);
    }
}

}  // namespace longqa::pai
