#include "longqa/datagen/samples.hpp"

#include <sstream>

#include <spdlog/spdlog.h>

#include "longqa/datagen/corpus.hpp"
#include "longqa/parallel.hpp"
#include "longqa/textproc/utf8.hpp"

namespace longqa::datagen {

namespace {

std::vector<const Document*> resolve(const std::vector<std::string>& refs, const std::vector<Document>& corpus) {
    std::vector<const Document*> out;
    for (const auto& r : refs) out.push_back(&find_document(corpus, r));
    return out;
}

void add(Histogram& h, std::size_t value) { ++h.counts[value / h.width * h.width]; }

nlohmann::json histogram_json(const Histogram& h) {
    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& [start, n] : h.counts) buckets.push_back({{"start", start}, {"end", start + h.width}, {"count", n}});
    return {{"width", h.width}, {"buckets", std::move(buckets)}};
}

}  // namespace

AugmentedSample augment_answer(const QuestionRecord& question, const std::vector<Document>& corpus,
                               const pai::Engine& engine) {
    std::vector<const Document*> refs;
    try {
        refs = resolve(question.spec.doc_refs, corpus);
    } catch (const Error& e) {
        throw pai::RunError(e.kind(), "question " + question.id + ": " + e.what(), {});
    }
    const auto verdict = filter_question(refs);
    if (!verdict.accepted) {
        throw pai::RunError(ErrorKind::pipeline,
                            "question " + question.id + ": combined input of " +
                                std::to_string(verdict.combined_tokens) + " tokens is over the limit",
                            {});
    }
    std::vector<Document> docs;
    for (const auto* d : refs) docs.push_back(*d);

    AugmentedSample s;
    try {
        s.trace = engine.run(question.question, docs);
    } catch (const pai::RunError& e) {
        throw pai::RunError(e.kind(), "question " + question.id + ": " + e.what(), e.partial());
    }
    s.id = question.id;
    s.question = question.question;
    s.doc_refs = question.spec.doc_refs;
    s.qtype = question.spec.qtype;
    s.plain_answer = s.trace.conclusion;
    s.cot_answer = pai::render_trace(s.trace);
    s.combined_input_tokens = verdict.combined_tokens;
    return s;
}

AugmentBatch augment_all(const std::vector<QuestionRecord>& questions, const std::vector<Document>& corpus,
                         const pai::Engine& engine, std::size_t parallelism) {
    std::vector<std::optional<AugmentedSample>> done(questions.size());
    std::vector<std::optional<AugmentFailure>> failed(questions.size());
    parallel_for(questions.size(), parallelism, [&](std::size_t i) {
        try {
            done[i] = augment_answer(questions[i], corpus, engine);
        } catch (const pai::RunError& e) {
            if (e.kind() == ErrorKind::fixture_miss) throw;
            spdlog::warn("{}", e.what());
            failed[i] = AugmentFailure{questions[i].id, e.kind(), e.what()};
        }
    });
    AugmentBatch batch;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (done[i]) batch.samples.push_back(std::move(*done[i]));
        if (failed[i]) batch.failures.push_back(std::move(*failed[i]));
    }
    return batch;
}

nlohmann::json to_json(const AugmentedSample& s) {
    return {{"id", s.id},
            {"question", s.question},
            {"doc_refs", s.doc_refs},
            {"qtype", to_string(s.qtype)},
            {"plain_answer", s.plain_answer},
            {"cot_answer", s.cot_answer},
            {"trace", pai::to_json(s.trace)},
            {"combined_input_tokens", s.combined_input_tokens}};
}

AugmentedSample sample_from_json(const nlohmann::json& j) {
    try {
        AugmentedSample s;
        s.id = j.at("id").get<std::string>();
        s.question = j.at("question").get<std::string>();
        s.doc_refs = j.at("doc_refs").get<std::vector<std::string>>();
        s.qtype = question_type_from_string(j.at("qtype").get<std::string>());
        s.plain_answer = j.at("plain_answer").get<std::string>();
        s.cot_answer = j.at("cot_answer").get<std::string>();
        s.trace = pai::trace_from_json(j.at("trace"));
        s.combined_input_tokens = j.value("combined_input_tokens", std::size_t{0});
        if (s.cot_answer != pai::render_trace(s.trace) || s.plain_answer != s.trace.conclusion) {
            throw FormatError("sample " + s.id + ": answers disagree with the embedded trace");
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed sample record: ") + e.what());
    }
}

std::string training_prompt(const std::string& question, const std::vector<const Document*>& docs) {
    std::string out;
    for (const auto* d : docs) {
        if (!out.empty()) out += "\n\n";
        out += "--- Document: " + d->metadata.company + " " + std::to_string(d->metadata.year) + " ---\n" + d->text;
    }
    out += "\n\nQuestion: " + question + "\nAnswer:";
    return out;
}

TrainingSample build_training_sample(const AugmentedSample& sample, const std::vector<Document>& corpus) {
    TrainingSample t;
    t.id = sample.id;
    t.prompt_text = training_prompt(sample.question, resolve(sample.doc_refs, corpus));
    t.target_text = sample.cot_answer;
    const std::size_t begin = utf8::length(t.prompt_text);
    t.loss_mask.emplace_back(begin, begin + utf8::length(t.target_text));
    return t;
}

nlohmann::json to_json(const TrainingSample& t) {
    nlohmann::json mask = nlohmann::json::array();
    for (const auto& [b, e] : t.loss_mask) mask.push_back({b, e});
    return {{"id", t.id}, {"prompt_text", t.prompt_text}, {"target_text", t.target_text}, {"loss_mask", mask}};
}

std::vector<StatsRow> stats_rows(const std::vector<AugmentedSample>& samples, const TokenScheme& scheme) {
    std::vector<StatsRow> rows;
    for (const auto& s : samples) {
        rows.push_back({s.qtype, s.combined_input_tokens, scheme.count(s.cot_answer), scheme.count(s.plain_answer)});
    }
    return rows;
}

std::vector<StatsRow> stats_rows(const std::vector<QuestionRecord>& questions) {
    std::vector<StatsRow> rows;
    for (const auto& q : questions) rows.push_back({q.spec.qtype, q.combined_tokens, std::nullopt, std::nullopt});
    return rows;
}

DatasetStats dataset_stats(const std::vector<StatsRow>& rows) {
    DatasetStats s;
    s.samples = rows.size();
    std::size_t cot_sum = 0, plain_sum = 0, answered = 0;
    for (const auto& r : rows) {
        (is_multi_source(r.qtype) ? s.multi_source : s.single_source) += 1;
        ++s.per_qtype[std::string(to_string(r.qtype))];
        add(s.input_tokens, r.input_tokens);
        if (r.cot_tokens && r.plain_tokens) {
            add(s.cot_tokens, *r.cot_tokens);
            add(s.plain_tokens, *r.plain_tokens);
            cot_sum += *r.cot_tokens;
            plain_sum += *r.plain_tokens;
            ++answered;
        }
    }
    if (s.samples) s.single_ratio = static_cast<double>(s.single_source) / static_cast<double>(s.samples);
    if (answered) {
        s.mean_cot_tokens = static_cast<double>(cot_sum) / static_cast<double>(answered);
        s.mean_plain_tokens = static_cast<double>(plain_sum) / static_cast<double>(answered);
    }
    return s;
}

nlohmann::json to_json(const DatasetStats& s) {
    return {{"samples", s.samples},
            {"single_source", s.single_source},
            {"multi_source", s.multi_source},
            {"single_ratio", s.single_ratio},
            {"multi_ratio", s.samples ? 1.0 - s.single_ratio : 0.0},
            {"per_qtype", s.per_qtype},
            {"histograms",
             {{"input_tokens", histogram_json(s.input_tokens)},
              {"cot_answer_tokens", histogram_json(s.cot_tokens)},
              {"plain_answer_tokens", histogram_json(s.plain_tokens)}}},
            {"mean_cot_answer_tokens", s.mean_cot_tokens},
            {"mean_plain_answer_tokens", s.mean_plain_tokens}};
}

std::string histograms_csv(const DatasetStats& s) {
    std::ostringstream out;
    out << "histogram,bucket_start,bucket_end,count\n";
    const std::pair<const char*, const Histogram*> all[] = {
        {"input_tokens", &s.input_tokens}, {"cot_answer_tokens", &s.cot_tokens}, {"plain_answer_tokens", &s.plain_tokens}};
    for (const auto& [name, h] : all) {
        for (const auto& [start, n] : h->counts) out << name << ',' << start << ',' << start + h->width << ',' << n << '\n';
    }
    return out.str();
}

}  // namespace longqa::datagen
