#include "longqa/eval/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "longqa/textproc/utf8.hpp"

namespace longqa::eval {

namespace {

bool is_space(char32_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == 0xA0 || c == 0x3000 ||
           (c >= 0x2000 && c <= 0x200B);
}

// ASCII punctuation plus the general, CJK and fullwidth punctuation blocks.
bool is_punct(char32_t c) {
    if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
                         (c >= 0x7B && c <= 0x7E);
    return (c >= 0x2010 && c <= 0x206F) || (c >= 0x3001 && c <= 0x303F) || (c >= 0xFF01 && c <= 0xFF0F) ||
           (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65) ||
           c == 0x00A1 || c == 0x00AB || c == 0x00BB || c == 0x00BF || c == 0x00B7;
}

char32_t fold(char32_t c) { return c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c; }

ScoreSummary summarize(long long sum, std::size_t perfect, std::size_t n) {
    ScoreSummary s;
    s.n = n;
    s.avg_score = static_cast<double>(sum) / static_cast<double>(n);
    s.perfect_rate = static_cast<double>(perfect) / static_cast<double>(n);
    return s;
}

struct Tally {
    long long sum = 0;
    std::size_t perfect = 0;
    std::size_t n = 0;
    void add(const JudgeScore& s) {
        sum += s.score;
        perfect += s.perfect;
        ++n;
    }
    ScoreSummary summary() const { return summarize(sum, perfect, n); }
};

nlohmann::json summary_json(const ScoreSummary& s) {
    return {{"n", s.n}, {"avg_score", s.avg_score}, {"perfect_rate", s.perfect_rate}};
}

std::string qtype_label(const std::string& q) { return q.empty() ? "unknown" : q; }

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::vector<std::string> f1_tokens(std::string_view text, Language language) {
    std::vector<std::string> out;
    std::string word;
    for (std::size_t pos = 0; pos < text.size();) {
        const char32_t c = fold(utf8::decode(text, pos));
        if (is_punct(c)) continue;
        if (language == Language::zh) {
            if (is_space(c)) continue;
            std::string one;
            utf8::append(one, c);
            out.push_back(std::move(one));
            continue;
        }
        if (is_space(c)) {
            if (!word.empty()) out.push_back(std::move(word));
            word.clear();
        } else {
            utf8::append(word, c);
        }
    }
    if (!word.empty()) out.push_back(std::move(word));
    return out;
}

double qa_f1(std::string_view prediction, std::string_view reference, Language language) {
    const auto pred = f1_tokens(prediction, language);
    const auto ref = f1_tokens(reference, language);
    if (pred.empty() || ref.empty()) return 0.0;
    std::unordered_map<std::string, long> counts;
    for (const auto& t : ref) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : pred) {
        if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double p = static_cast<double>(common) / static_cast<double>(pred.size());
    const double r = static_cast<double>(common) / static_cast<double>(ref.size());
    return 2 * p * r / (p + r);
}

std::optional<std::string> length_bucket(std::size_t t) {
    if (t <= 10'000) return std::nullopt;
    if (t <= 50'000) return "Set1";
    if (t <= 100'000) return "Set2";
    if (t <= 200'000) return "Set3";
    if (t <= 250'000) return "Set4";
    return std::nullopt;
}

ScoreSummary aggregate(const std::vector<JudgeScore>& scores) {
    if (scores.empty()) throw EmptySetError("cannot aggregate an empty score list");
    Tally t;
    for (const auto& s : scores) t.add(s);
    return t.summary();
}

ScoreReport score_report(const std::vector<JudgeOutcome>& outcomes, const std::vector<PredictionRecord>& records) {
    std::unordered_map<std::string, const PredictionRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);

    ScoreReport report;
    report.outcomes = outcomes;
    std::vector<JudgeScore> scored;
    std::map<std::string, Tally> buckets, qtypes;
    for (const auto& o : outcomes) {
        if (!o.score) {
            ++report.excluded;
            continue;
        }
        scored.push_back(*o.score);
        const auto it = by_id.find(o.id);
        const PredictionRecord* rec = it == by_id.end() ? nullptr : it->second;
        qtypes[qtype_label(rec ? rec->qtype : "")].add(*o.score);
        const auto bucket = rec && rec->input_tokens ? length_bucket(*rec->input_tokens) : std::nullopt;
        if (bucket) {
            buckets[*bucket].add(*o.score);
        } else {
            ++report.unbucketed;
        }
    }
    if (scored.empty()) throw EmptySetError("no sample was scored");
    report.overall = aggregate(scored);
    double as = 0, pr = 0;
    for (const auto& [name, t] : qtypes) {
        const auto s = t.summary();
        report.per_qtype[name] = s;
        as += s.avg_score;
        pr += s.perfect_rate;
    }
    report.task_weighted_avg_score = as / static_cast<double>(qtypes.size());
    report.task_weighted_perfect_rate = pr / static_cast<double>(qtypes.size());
    for (const auto& [name, t] : buckets) report.per_bucket[name] = t.summary();
    return report;
}

nlohmann::json to_json(const ScoreReport& r) {
    nlohmann::json per_bucket = nlohmann::json::object(), per_qtype = nlohmann::json::object();
    for (const auto& [k, s] : r.per_bucket) per_bucket[k] = summary_json(s);
    for (const auto& [k, s] : r.per_qtype) per_qtype[k] = summary_json(s);
    nlohmann::json scores = nlohmann::json::array(), unscored = nlohmann::json::array();
    for (const auto& o : r.outcomes) {
        if (o.score) {
            scores.push_back(to_json(*o.score));
        } else {
            unscored.push_back({{"id", o.id}, {"error", o.error}});
        }
    }
    return {{"n", r.overall.n},
            {"excluded", r.excluded},
            {"avg_score", r.overall.avg_score},
            {"perfect_rate", r.overall.perfect_rate},
            {"task_weighted", {{"avg_score", r.task_weighted_avg_score}, {"perfect_rate", r.task_weighted_perfect_rate}}},
            {"unbucketed", r.unbucketed},
            {"per_bucket", per_bucket},
            {"per_qtype", per_qtype},
            {"scores", scores},
            {"unscored", unscored}};
}

std::string to_csv(const ScoreReport& r) {
    std::ostringstream out;
    out << "group,name,n,AS,PR\n";
    const auto row = [&](const char* group, const std::string& name, const ScoreSummary& s) {
        out << group << ',' << name << ',' << s.n << ',' << fixed(s.avg_score, 2) << ',' << fixed(s.perfect_rate, 2)
            << '\n';
    };
    row("overall", "all", r.overall);
    for (const auto& [k, s] : r.per_qtype) row("qtype", k, s);
    for (const auto& [k, s] : r.per_bucket) row("bucket", k, s);
    return out.str();
}

F1Report f1_report(const std::vector<PredictionRecord>& records, std::optional<Language> language) {
    if (records.empty()) throw EmptySetError("no predictions to score");
    F1Report report;
    report.n = records.size();
    std::map<std::string, std::pair<double, std::size_t>> qtypes, buckets;
    double total = 0;
    for (const auto& r : records) {
        const double f = qa_f1(r.prediction, r.reference, language.value_or(r.language));
        report.rows.push_back({r.id, f});
        total += f;
        auto& q = qtypes[qtype_label(r.qtype)];
        q.first += f;
        ++q.second;
        if (const auto b = r.input_tokens ? length_bucket(*r.input_tokens) : std::nullopt) {
            auto& e = buckets[*b];
            e.first += f;
            ++e.second;
        }
    }
    report.mean_f1 = total / static_cast<double>(records.size());
    for (const auto& [k, v] : qtypes) report.per_qtype[k] = v.first / static_cast<double>(v.second);
    for (const auto& [k, v] : buckets) report.per_bucket[k] = v.first / static_cast<double>(v.second);
    return report;
}

nlohmann::json to_json(const F1Report& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) rows.push_back({{"id", row.id}, {"f1", row.f1}});
    return {{"n", r.n}, {"mean_f1", r.mean_f1}, {"per_qtype", r.per_qtype}, {"per_bucket", r.per_bucket}, {"rows", rows}};
}

EfficiencyReport efficiency_report(const std::map<std::string, gateway::TokenAccount>& accounts) {
    EfficiencyReport r;
    for (const auto& [label, account] : accounts) r.runs[label] = gateway::efficiency_totals(account);
    for (const auto& [num, a] : r.runs) {
        for (const auto& [den, b] : r.runs) {
            if (num == den) continue;
            EfficiencyRatio ratio{num, den, std::nullopt};
            if (b.total_input_tokens) {
                ratio.input_ratio = static_cast<double>(a.total_input_tokens) / static_cast<double>(b.total_input_tokens);
            }
            r.ratios.push_back(std::move(ratio));
        }
    }
    return r;
}

nlohmann::json to_json(const EfficiencyReport& r) {
    nlohmann::json runs = nlohmann::json::object();
    for (const auto& [label, t] : r.runs) {
        nlohmann::json stages = nlohmann::json::object();
        for (const auto& [stage, s] : t.per_stage) {
            stages[stage] = {{"calls", s.calls},
                             {"input_tokens", s.input_tokens},
                             {"output_tokens", s.output_tokens},
                             {"failed_attempts", s.failed_attempts}};
        }
        runs[label] = {{"total_input_tokens", t.total_input_tokens},
                       {"total_output_tokens", t.total_output_tokens},
                       {"total_calls", t.total_calls},
                       {"stages", stages}};
    }
    nlohmann::json ratios = nlohmann::json::array();
    for (const auto& x : r.ratios) {
        ratios.push_back({{"numerator", x.numerator},
                          {"denominator", x.denominator},
                          {"input_ratio", x.input_ratio ? nlohmann::json(*x.input_ratio) : nlohmann::json()}});
    }
    return {{"runs", runs}, {"ratios", ratios}};
}

std::string ratio_table(const EfficiencyReport& r) {
    std::ostringstream out;
    for (const auto& [label, t] : r.runs) {
        out << label << ": " << t.total_input_tokens << " input, " << t.total_output_tokens << " output, "
            << t.total_calls << " calls\n";
    }
    for (const auto& x : r.ratios) {
        out << x.numerator << " / " << x.denominator << " input tokens = "
            << (x.input_ratio ? fixed(*x.input_ratio, 4) : std::string("n/a")) << '\n';
    }
    return out.str();
}

}  // namespace longqa::eval
