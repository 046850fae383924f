#include "longqa/textproc/document.hpp"

#include "longqa/error.hpp"
#include "longqa/textproc/utf8.hpp"

namespace longqa {

std::string_view to_string(Language lang) noexcept { return lang == Language::zh ? "zh" : "en"; }

Language language_from_string(std::string_view s) {
    if (s == "en") return Language::en;
    if (s == "zh") return Language::zh;
    throw FormatError("unknown language: " + std::string(s));
}

std::string Document::title() const {
    if (!metadata.title.empty()) return metadata.title;
    return metadata.company + "'s " + std::to_string(metadata.year) + " annual report";
}

Document make_document(std::string id, std::string text, DocumentMetadata metadata, const TokenScheme& scheme) {
    Document doc;
    doc.id = std::move(id);
    doc.text = std::move(text);
    doc.metadata = std::move(metadata);
    doc.token_count = scheme.count(doc.text);
    doc.scheme = scheme.label();
    return doc;
}

nlohmann::json to_json(const Document& doc) {
    nlohmann::json meta = {{"company", doc.metadata.company},
                           {"year", doc.metadata.year},
                           {"language", to_string(doc.metadata.language)},
                           {"source", doc.metadata.source}};
    if (!doc.metadata.title.empty()) meta["title"] = doc.metadata.title;
    return {{"id", doc.id},
            {"text", doc.text},
            {"metadata", std::move(meta)},
            {"token_count", doc.token_count},
            {"scheme", doc.scheme}};
}

Document document_from_json(const nlohmann::json& j) {
    try {
        Document doc;
        doc.id = j.at("id").get<std::string>();
        doc.text = j.at("text").get<std::string>();
        if (!utf8::is_valid(doc.text)) throw FormatError("document " + doc.id + " is not valid UTF-8");
        const auto& meta = j.at("metadata");
        doc.metadata.company = meta.value("company", "");
        doc.metadata.year = meta.value("year", 0);
        doc.metadata.language = language_from_string(meta.value("language", "en"));
        doc.metadata.source = meta.value("source", "");
        doc.metadata.title = meta.value("title", "");
        doc.token_count = j.at("token_count").get<std::size_t>();
        doc.scheme = j.value("scheme", "");
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed document record: ") + e.what());
    }
}

}  // namespace longqa
