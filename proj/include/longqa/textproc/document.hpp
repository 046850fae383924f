#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "longqa/textproc/token_scheme.hpp"

namespace longqa {

enum class Language { en, zh };

std::string_view to_string(Language lang) noexcept;
Language language_from_string(std::string_view s);  // throws FormatError

struct DocumentMetadata {
    std::string company;
    int year = 0;
    Language language = Language::en;
    std::string source;
    // Display title used as a property subject. Empty means the finance
    // default "<company>'s <year> annual report".
    std::string title;

    bool operator==(const DocumentMetadata&) const = default;
};

struct Document {
    std::string id;
    std::string text;
    DocumentMetadata metadata;
    std::size_t token_count = 0;
    std::string scheme;  // TokenScheme::label() the count was taken under

    std::string title() const;

    bool operator==(const Document&) const = default;
};

// Builds a document and counts its tokens under `scheme`.
Document make_document(std::string id, std::string text, DocumentMetadata metadata,
                       const TokenScheme& scheme);

// Corpus JSONL line: {id, text, metadata, token_count, scheme}.
nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);  // throws FormatError

}  // namespace longqa
