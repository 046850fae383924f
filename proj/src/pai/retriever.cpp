#include "longqa/pai/retriever.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "longqa/textproc/utf8.hpp"

namespace longqa::pai {

namespace {

using TermCounts = std::unordered_map<std::string, double>;

TermCounts term_counts(std::string_view text) {
    TermCounts counts;
    for (auto& t : lexical_terms(text)) counts[std::move(t)] += 1.0;
    return counts;
}

double norm(const TermCounts& v) {
    double sum = 0;
    for (const auto& [_, c] : v) sum += c * c;
    return std::sqrt(sum);
}

}  // namespace

std::vector<std::string> lexical_terms(std::string_view text) {
    std::vector<std::string> terms;
    std::string word;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            if (std::isalnum(c)) {
                word.push_back(static_cast<char>(std::tolower(c)));
            } else if (!word.empty()) {
                terms.push_back(std::move(word));
                word.clear();
            }
            ++i;
            continue;
        }
        if (!word.empty()) {
            terms.push_back(std::move(word));
            word.clear();
        }
        std::size_t len = utf8::sequence_length(c);
        if (len == 0 || i + len > text.size()) len = 1;
        terms.emplace_back(text.substr(i, len));
        i += len;
    }
    if (!word.empty()) terms.push_back(std::move(word));
    return terms;
}

std::vector<double> LexicalRetriever::score(std::string_view query, const std::vector<Chunk>& chunks) const {
    const TermCounts q = term_counts(query);
    const double qn = norm(q);
    std::vector<double> scores(chunks.size(), 0.0);
    if (qn == 0) return scores;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const TermCounts d = term_counts(chunks[i].text);
        const double dn = norm(d);
        if (dn == 0) continue;
        double dot = 0;
        for (const auto& [term, c] : q) {
            if (const auto it = d.find(term); it != d.end()) dot += c * it->second;
        }
        scores[i] = dot / (qn * dn);
    }
    return scores;
}

std::vector<std::size_t> top_k(const std::vector<double>& scores, const std::vector<Chunk>& chunks, std::size_t k) {
    const auto by_position = [&](std::size_t a, std::size_t b) {
        return std::tie(chunks[a].doc_id, chunks[a].index) < std::tie(chunks[b].doc_id, chunks[b].index);
    };
    std::vector<std::size_t> order(chunks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return by_position(a, b);
    });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end(), by_position);
    return order;
}

}  // namespace longqa::pai
