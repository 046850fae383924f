#include "longqa/datagen/questions.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <random>
#include <set>

#include "longqa/datagen/corpus.hpp"
#include "longqa/pai/property.hpp"

namespace longqa::datagen {

namespace {

std::string fold(std::string_view s) {
    std::string out = pai::normalize_whitespace(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Portable picks: mt19937_64's output sequence is fixed by the standard,
// distributions are not.
struct Draw {
    std::mt19937_64 rng;
    explicit Draw(std::uint64_t seed) : rng(seed) {}
    std::size_t below(std::size_t n) { return n ? static_cast<std::size_t>(rng() % n) : 0; }
    // Skewed toward 0, for "prefer the best ranked".
    std::size_t low_biased(std::size_t n) {
        const std::size_t a = below(n);
        const std::size_t b = below(n);
        return std::min(a, b);
    }
    double unit() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
    // First k of a Fisher-Yates shuffle of [0, n).
    std::vector<std::size_t> choose(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        k = std::min(k, n);
        for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + below(n - i)]);
        idx.resize(k);
        return idx;
    }
};

// Longest run of consecutive years as [first, last) indices into `years`.
std::pair<std::size_t, std::size_t> longest_run(const std::vector<int>& years) {
    std::size_t best_begin = 0, best_len = years.empty() ? 0 : 1;
    std::size_t begin = 0;
    for (std::size_t i = 1; i < years.size(); ++i) {
        if (years[i] != years[i - 1] + 1) begin = i;
        if (i - begin + 1 > best_len) {
            best_len = i - begin + 1;
            best_begin = begin;
        }
    }
    return {best_begin, best_begin + best_len};
}

std::vector<int> years_of(const std::vector<const CatalogEntry*>& reports) {
    std::vector<int> out;
    for (const auto* e : reports) out.push_back(e->year);
    return out;
}

// Distinct companies per year, one document each (the first in catalog order).
std::map<int, std::vector<const CatalogEntry*>> companies_by_year(const Catalog& catalog) {
    std::map<int, std::vector<const CatalogEntry*>> out;
    for (const auto& e : catalog.entries()) {
        auto& v = out[e.year];
        if (v.empty() || v.back()->company != e.company) v.push_back(&e);
    }
    return out;
}

// One document per company (its latest year).
std::vector<const CatalogEntry*> one_per_company(const Catalog& catalog) {
    std::vector<const CatalogEntry*> out;
    for (const auto& e : catalog.entries()) {
        if (!out.empty() && out.back()->company == e.company) out.back() = &e;
        else out.push_back(&e);
    }
    return out;
}

std::vector<std::string> trend_companies(const Catalog& catalog) {
    std::vector<std::string> out;
    for (const auto& c : catalog.ranked_companies()) {
        const auto [b, e] = longest_run(years_of(catalog.reports_of(c)));
        if (e - b >= 2) out.push_back(c);
    }
    return out;
}

std::size_t company_count(const Catalog& catalog) { return one_per_company(catalog).size(); }

std::string title_of(const CatalogEntry& e) { return e.company + "'s " + std::to_string(e.year) + " annual report"; }

std::string quoted(const std::string& metric) { return "'" + metric + "'"; }

}  // namespace

std::string_view to_string(QuestionType t) noexcept {
    switch (t) {
        case QuestionType::single_source: return "single_source";
        case QuestionType::comparison: return "comparison";
        case QuestionType::clustering: return "clustering";
        case QuestionType::trend: return "trend";
        case QuestionType::chain: return "chain";
    }
    return "single_source";
}

QuestionType question_type_from_string(std::string_view s) {
    for (const auto t : {QuestionType::single_source, QuestionType::comparison, QuestionType::clustering,
                         QuestionType::trend, QuestionType::chain}) {
        if (s == to_string(t)) return t;
    }
    throw FormatError("unknown question type '" + std::string(s) + "'");
}

// --- metric pool -----------------------------------------------------------

MetricPool::MetricPool(std::string domain, const std::vector<std::string>& metrics) : domain_(std::move(domain)) {
    std::set<std::string> seen;
    for (const auto& m : metrics) {
        std::string clean = pai::normalize_whitespace(m);
        if (clean.empty()) continue;
        if (seen.insert(fold(clean)).second) metrics_.push_back(std::move(clean));
    }
    if (metrics_.empty()) throw ConfigError("metric pool '" + domain_ + "' is empty");
}

MetricPool MetricPool::finance_default() {
    return MetricPool("finance", {"Revenue", "Net Profit", "Operating Income", "Cash Flow from Operations",
                                  "Total Debt", "Total Assets", "Total Liabilities", "Accounts Payable",
                                  "Accounts Receivable", "Administrative Expenses", "Research and Development Expenses",
                                  "Gross Margin", "Inventory", "Earnings per Share"});
}

MetricPool MetricPool::from_json(const nlohmann::json& j) {
    try {
        return MetricPool(j.value("domain", "finance"), j.at("metrics").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("metric pool: ") + e.what());
    }
}

nlohmann::json MetricPool::to_json() const { return {{"domain", domain_}, {"metrics", metrics_}}; }

// --- catalog ---------------------------------------------------------------

double consecutive_years(const std::string&, const std::vector<int>& years) {
    const auto [b, e] = longest_run(years);
    return static_cast<double>(e - b);
}

Catalog::Catalog(const std::vector<Document>& docs, CompanyRanking ranking) {
    for (const auto& d : docs) entries_.push_back({d.id, d.metadata.company, d.metadata.year, d.token_count});
    std::sort(entries_.begin(), entries_.end(), [](const CatalogEntry& a, const CatalogEntry& b) {
        return std::tie(a.company, a.year, a.doc_id) < std::tie(b.company, b.year, b.doc_id);
    });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        by_id_.emplace(e.doc_id, i);
        auto& years = by_company_[e.company];
        if (years.empty() || entries_[years.back()].year != e.year) years.push_back(i);
    }
    std::vector<std::pair<double, std::string>> scored;
    for (const auto* e : one_per_company(*this)) {
        scored.emplace_back(ranking(e->company, years_of(reports_of(e->company))), e->company);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (auto& [_, c] : scored) ranked_.push_back(std::move(c));
}

std::vector<const CatalogEntry*> Catalog::reports_of(const std::string& company) const {
    std::vector<const CatalogEntry*> out;
    if (const auto it = by_company_.find(company); it != by_company_.end()) {
        for (const auto i : it->second) out.push_back(&entries_[i]);
    }
    return out;
}

const CatalogEntry& Catalog::entry(std::string_view doc_id) const {
    const auto it = by_id_.find(doc_id);
    if (it == by_id_.end()) throw ConfigError("document '" + std::string(doc_id) + "' is not in the catalog");
    return entries_[it->second];
}

// --- specs -----------------------------------------------------------------

QuestionSpec sample_question_spec(const MetricPool& pool, const Catalog& catalog, QuestionType qtype,
                                  std::uint64_t seed) {
    Draw draw(seed);
    QuestionSpec spec;
    spec.qtype = qtype;
    spec.seed = seed;
    std::vector<const CatalogEntry*> picked;

    switch (qtype) {
        case QuestionType::single_source: {
            if (catalog.entries().empty()) throw CapacityError("catalog is empty");
            picked.push_back(&catalog.entries()[draw.below(catalog.entries().size())]);
            break;
        }
        case QuestionType::trend: {
            const auto eligible = trend_companies(catalog);
            if (eligible.empty()) throw CapacityError("trend questions need a company with two consecutive years");
            const auto reports = catalog.reports_of(eligible[draw.low_biased(eligible.size())]);
            auto [b, e] = longest_run(years_of(reports));
            if (e - b > 5) b += draw.below(e - b - 5 + 1), e = b + 5;
            picked.assign(reports.begin() + static_cast<std::ptrdiff_t>(b), reports.begin() + static_cast<std::ptrdiff_t>(e));
            break;
        }
        case QuestionType::comparison:
        case QuestionType::clustering: {
            const std::size_t lo = qtype == QuestionType::comparison ? 2 : 3;
            const std::size_t hi = qtype == QuestionType::comparison ? 4 : 5;
            std::vector<const std::vector<const CatalogEntry*>*> years;
            const auto by_year = companies_by_year(catalog);
            for (const auto& [_, v] : by_year) {
                if (v.size() >= 2) years.push_back(&v);
            }
            std::vector<const CatalogEntry*> candidates;
            if (!years.empty()) {
                candidates = *years[draw.below(years.size())];
            } else {
                candidates = one_per_company(catalog);  // no shared year; mix years
            }
            if (candidates.size() < 2) throw CapacityError(std::string(to_string(qtype)) + " questions need two companies");
            const std::size_t min_k = std::min(lo, candidates.size());
            const std::size_t max_k = std::min(hi, candidates.size());
            const std::size_t k = min_k + draw.below(max_k - min_k + 1);
            for (const auto i : draw.choose(candidates.size(), k)) picked.push_back(candidates[i]);
            break;
        }
        case QuestionType::chain: {
            const auto candidates = one_per_company(catalog);
            if (candidates.size() < 2) throw CapacityError("chain questions need two companies");
            for (const auto i : draw.choose(candidates.size(), 2)) picked.push_back(candidates[i]);
            break;
        }
    }
    if (qtype != QuestionType::trend) {
        std::sort(picked.begin(), picked.end(), [](const CatalogEntry* a, const CatalogEntry* b) {
            return std::tie(a->company, a->year, a->doc_id) < std::tie(b->company, b->year, b->doc_id);
        });
    }
    for (const auto* e : picked) spec.doc_refs.push_back(e->doc_id);

    const std::size_t n_metrics = qtype == QuestionType::chain ? 2 : 1;
    for (const auto i : draw.choose(pool.metrics().size(), n_metrics)) spec.metrics.push_back(pool.metrics()[i]);
    return spec;
}

QuestionType sample_question_type(const Catalog& catalog, double single_weight, std::uint64_t seed) {
    Draw draw(seed);
    const double u = draw.unit();
    std::vector<QuestionType> multi;
    const std::size_t companies = company_count(catalog);
    if (companies >= 2) multi.push_back(QuestionType::comparison);
    if (companies >= 2) multi.push_back(QuestionType::clustering);
    if (!trend_companies(catalog).empty()) multi.push_back(QuestionType::trend);
    if (companies >= 2) multi.push_back(QuestionType::chain);
    if (u < single_weight || multi.empty()) return QuestionType::single_source;
    return multi[draw.below(multi.size())];
}

std::string generate_question(const QuestionSpec& spec, const Catalog& catalog, GenerationMode mode,
                              const gateway::Gateway* gateway, const pai::PromptPack* prompts,
                              gateway::TokenAccount* account) {
    if (spec.metrics.empty() || spec.doc_refs.empty()) throw QuestionGenerationError("question spec is incomplete");
    std::vector<const CatalogEntry*> docs;
    for (const auto& id : spec.doc_refs) docs.push_back(&catalog.entry(id));

    if (mode == GenerationMode::llm) {
        if (!gateway || !account) throw ConfigError("llm question generation needs a backend");
        const pai::PromptPack defaults = pai::PromptPack::defaults();
        const pai::PromptPack& pack = prompts ? *prompts : defaults;
        std::string metrics, titles;
        for (const auto& m : spec.metrics) metrics += (metrics.empty() ? "" : ", ") + m;
        for (const auto* d : docs) titles += (titles.empty() ? "- " : "\n- ") + title_of(*d);
        auto [system, user] = pack.render(
            "question", {{"qtype", std::string(to_string(spec.qtype))}, {"metrics", metrics}, {"documents", titles}});
        const auto resp = gateway->send_chat(gateway->make_request(system, user), "generation", *account);
        std::string q = resp.text ? pai::normalize_whitespace(*resp.text) : std::string();
        if (q.empty()) throw QuestionGenerationError("model returned an empty question");
        return q;
    }

    const std::string& m = spec.metrics.front();
    const auto& first = *docs.front();
    switch (spec.qtype) {
        case QuestionType::single_source:
            return "What was the " + quoted(m) + " reported in " + title_of(first) + "?";
        case QuestionType::comparison:
            return "Which company has the highest " + quoted(m) + "?";
        case QuestionType::clustering:
            return "How can the companies be grouped by their " + quoted(m) + " in " + std::to_string(first.year) + "?";
        case QuestionType::trend:
            return "What is the trend observed in the " + quoted(m) + " figures for " + first.company + " from " +
                   std::to_string(first.year) + " to " + std::to_string(docs.back()->year) + "?";
        case QuestionType::chain: {
            const std::string& m2 = spec.metrics.size() > 1 ? spec.metrics[1] : m;
            const auto& second = *docs.back();
            return "Is the " + quoted(m) + " of " + first.company + " in " + std::to_string(first.year) +
                   " larger than the " + quoted(m2) + " of " + second.company + " in " + std::to_string(second.year) +
                   "?";
        }
    }
    return {};
}

// --- records ---------------------------------------------------------------

nlohmann::json to_json(const QuestionRecord& q) {
    return {{"id", q.id},
            {"question", q.question},
            {"qtype", to_string(q.spec.qtype)},
            {"metrics", q.spec.metrics},
            {"doc_refs", q.spec.doc_refs},
            {"seed", q.spec.seed},
            {"combined_tokens", q.combined_tokens}};
}

QuestionRecord question_from_json(const nlohmann::json& j) {
    try {
        QuestionRecord q;
        q.id = j.at("id").get<std::string>();
        q.question = j.at("question").get<std::string>();
        q.spec.qtype = question_type_from_string(j.at("qtype").get<std::string>());
        q.spec.metrics = j.value("metrics", std::vector<std::string>{});
        q.spec.doc_refs = j.at("doc_refs").get<std::vector<std::string>>();
        q.spec.seed = j.value("seed", std::uint64_t{0});
        q.combined_tokens = j.value("combined_tokens", std::size_t{0});
        const bool multi = is_multi_source(q.spec.qtype);
        if ((!multi && q.spec.doc_refs.size() != 1) || (multi && q.spec.doc_refs.size() < 2)) {
            throw FormatError("question " + q.id + ": wrong number of doc_refs for " + std::string(to_string(q.spec.qtype)));
        }
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed question record: ") + e.what());
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

QuestionBatch generate_questions(const std::vector<Document>& corpus, const MetricPool& pool,
                                 const QuestionBatchConfig& config, const gateway::Gateway* gateway,
                                 const pai::PromptPack* prompts, gateway::TokenAccount* account) {
    if (config.single_weight < 0 || config.single_weight > 1) throw ConfigError("single_weight must be in [0, 1]");
    const Catalog catalog(corpus);
    QuestionBatch batch;
    for (std::size_t i = 0; i < config.count; ++i) {
        const std::uint64_t item_seed = mix_seed(config.seed, i);
        QuestionRecord q;
        char id[32];
        std::snprintf(id, sizeof id, "q%06zu", i);
        q.id = id;
        const auto qtype = sample_question_type(catalog, config.single_weight, item_seed);
        q.spec = sample_question_spec(pool, catalog, qtype, mix_seed(item_seed, 1));
        q.question = generate_question(q.spec, catalog, config.mode, gateway, prompts, account);
        std::vector<const Document*> docs;
        for (const auto& ref : q.spec.doc_refs) docs.push_back(&find_document(corpus, ref));
        const auto verdict = filter_question(docs);
        q.combined_tokens = verdict.combined_tokens;
        (verdict.accepted ? batch.accepted : batch.rejected).push_back(std::move(q));
    }
    return batch;
}

}  // namespace longqa::datagen
