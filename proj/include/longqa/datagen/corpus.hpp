#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "longqa/textproc/document.hpp"

namespace longqa::datagen {

// Report length window and combined-input ceiling, all inclusive.
inline constexpr std::size_t kMinReportTokens = 20'000;
inline constexpr std::size_t kMaxReportTokens = 80'000;
inline constexpr std::size_t kMaxCombinedTokens = 256'000;

// Drops tags, comments, <script>/<style> bodies; decodes common entities.
std::string strip_html(std::string_view html);

struct IngestResult {
    std::optional<Document> document;  // set when accepted
    std::string id;
    std::size_t token_count = 0;
    std::string reason;  // "below 20K" / "above 80K" when rejected

    bool accepted() const noexcept { return document.has_value(); }
};

// Throws FormatError when `raw` (after optional tag stripping) is not UTF-8.
IngestResult ingest_report(std::string_view raw, std::string id, DocumentMetadata metadata, const TokenScheme& scheme,
                           bool html = false);

// Fetches `url` first; transport failures propagate as TransportError.
IngestResult ingest_url(const std::string& url, std::string id, DocumentMetadata metadata, const TokenScheme& scheme,
                        std::chrono::milliseconds timeout = std::chrono::seconds(60));

// Sidecar JSON: {"company", "year", "language"?, "source"?, "title"?}.
DocumentMetadata metadata_from_json(const nlohmann::json& j);  // throws FormatError
nlohmann::json to_json(const DocumentMetadata& m);

struct FilterResult {
    bool accepted = false;
    std::size_t combined_tokens = 0;
};

// Accepts when the documents' token counts sum to at most 256,000.
FilterResult filter_question(const std::vector<const Document*>& docs);

// --- JSONL ---------------------------------------------------------------

// Calls `fn` for every non-blank line. Parse errors become FormatError
// naming the file and line.
void read_jsonl(const std::filesystem::path& path, const std::function<void(const nlohmann::json&)>& fn);

// Writes one compact JSON value per line, "\n"-terminated.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

std::vector<Document> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

// Throws ConfigError for an unknown id.
const Document& find_document(const std::vector<Document>& corpus, std::string_view id);

}  // namespace longqa::datagen
