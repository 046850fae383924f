#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "longqa/textproc/document.hpp"
#include "longqa/textproc/token_scheme.hpp"

namespace longqa {

inline constexpr std::size_t kDefaultChunkBudget = 1024;

struct Chunk {
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    std::size_t begin = 0;  // byte range [begin, end) in the parent text
    std::size_t end = 0;
    std::size_t token_count = 0;

    bool operator==(const Chunk&) const = default;
};

// Splits a document into contiguous chunks of at most `max_tokens` tokens.
//
// Boundaries are chosen greedily, preferring paragraph breaks, then sentence
// ends, then whitespace, then a hard split on a code point boundary. Every
// chunk fits the budget unless it is a single code point that alone exceeds
// it. Concatenating the chunk texts reproduces the document byte-for-byte.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_tokens,
                                  const TokenScheme& scheme);

}  // namespace longqa
