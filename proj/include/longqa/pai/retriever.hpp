#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "longqa/textproc/chunker.hpp"

namespace longqa::pai {

// Scores chunks against a query; higher is more relevant.
class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::vector<double> score(std::string_view query, const std::vector<Chunk>& chunks) const = 0;
};

// Lowercased word unigrams: ASCII letter/digit runs, plus every non-ASCII
// code point on its own (so CJK text is scored per character).
std::vector<std::string> lexical_terms(std::string_view text);

// Cosine similarity of raw term-frequency vectors.
class LexicalRetriever : public Retriever {
public:
    std::vector<double> score(std::string_view query, const std::vector<Chunk>& chunks) const override;
};

// Indices of the k best-scoring chunks (ties broken by (doc_id, index)),
// returned in (doc_id, index) order. k larger than the pool takes everything.
std::vector<std::size_t> top_k(const std::vector<double>& scores, const std::vector<Chunk>& chunks, std::size_t k);

}  // namespace longqa::pai
