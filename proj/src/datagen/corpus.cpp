#include "longqa/datagen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "longqa/error.hpp"
#include "longqa/gateway/backend.hpp"
#include "longqa/textproc/utf8.hpp"

namespace longqa::datagen {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (pos + prefix.size() > s.size()) return false;
    return lower(s.substr(pos, prefix.size())) == prefix;
}

// Tag name in lowercase, without '/' or attributes.
std::string tag_name(std::string_view tag) {
    std::size_t i = 0;
    if (i < tag.size() && tag[i] == '/') ++i;
    std::size_t j = i;
    while (j < tag.size() && std::isalnum(static_cast<unsigned char>(tag[j]))) ++j;
    return lower(tag.substr(i, j - i));
}

bool is_block(const std::string& name) {
    static const char* blocks[] = {"p", "br", "div", "tr", "li", "h1", "h2", "h3", "h4", "h5", "h6", "table", "section"};
    return std::any_of(std::begin(blocks), std::end(blocks), [&](const char* b) { return name == b; });
}

// Decodes the entity starting at text[pos] == '&'; returns false when it is not one.
bool decode_entity(std::string_view text, std::size_t& pos, std::string& out) {
    const auto semi = text.find(';', pos);
    if (semi == std::string_view::npos || semi - pos > 10) return false;
    const std::string_view name = text.substr(pos + 1, semi - pos - 1);
    char32_t cp = 0;
    if (name == "amp") cp = '&';
    else if (name == "lt") cp = '<';
    else if (name == "gt") cp = '>';
    else if (name == "quot") cp = '"';
    else if (name == "apos") cp = '\'';
    else if (name == "nbsp") cp = ' ';
    else if (name.size() > 1 && name[0] == '#') {
        try {
            const bool hex = name[1] == 'x' || name[1] == 'X';
            cp = static_cast<char32_t>(std::stoul(std::string(name.substr(hex ? 2 : 1)), nullptr, hex ? 16 : 10));
        } catch (const std::exception&) {
            return false;
        }
        if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    } else {
        return false;
    }
    utf8::append(out, cp);
    pos = semi + 1;
    return true;
}

}  // namespace

std::string strip_html(std::string_view html) {
    std::string out;
    out.reserve(html.size());
    std::size_t i = 0;
    while (i < html.size()) {
        const char c = html[i];
        if (c == '<') {
            if (html.compare(i, 4, "<!--") == 0) {
                const auto end = html.find("-->", i + 4);
                i = end == std::string_view::npos ? html.size() : end + 3;
                continue;
            }
            const auto close = html.find('>', i + 1);
            if (close == std::string_view::npos) {
                out.append(html.substr(i));
                break;
            }
            const std::string name = tag_name(html.substr(i + 1, close - i - 1));
            i = close + 1;
            if ((name == "script" || name == "style") && html[close - 1] != '/') {
                // skip to the matching close tag
                std::size_t j = i;
                while (j < html.size()) {
                    j = html.find("</", j);
                    if (j == std::string_view::npos) break;
                    if (starts_with_ci(html, j + 2, name)) break;
                    j += 2;
                }
                if (j == std::string_view::npos) {
                    i = html.size();
                } else {
                    const auto end = html.find('>', j);
                    i = end == std::string_view::npos ? html.size() : end + 1;
                }
                continue;
            }
            if (is_block(name) && !out.empty() && out.back() != '\n') out.push_back('\n');
            continue;
        }
        if (c == '&' && decode_entity(html, i, out)) continue;
        out.push_back(c);
        ++i;
    }
    const auto last = out.find_last_not_of(" \t\r\n");
    out.erase(last == std::string::npos ? 0 : last + 1);
    return out;
}

IngestResult ingest_report(std::string_view raw, std::string id, DocumentMetadata metadata, const TokenScheme& scheme,
                           bool html) {
    if (!utf8::is_valid(raw)) throw FormatError("report " + id + " is not valid UTF-8");
    std::string text = html ? strip_html(raw) : std::string(raw);
    IngestResult r;
    r.id = id;
    r.token_count = scheme.count(text);
    if (r.token_count < kMinReportTokens) {
        r.reason = "below 20K";
    } else if (r.token_count > kMaxReportTokens) {
        r.reason = "above 80K";
    } else {
        r.document = make_document(std::move(id), std::move(text), std::move(metadata), scheme);
    }
    return r;
}

IngestResult ingest_url(const std::string& url, std::string id, DocumentMetadata metadata, const TokenScheme& scheme,
                        std::chrono::milliseconds timeout) {
    const std::string body = gateway::http_get(url, timeout);
    const bool html = body.find("<html") != std::string::npos || body.find("<HTML") != std::string::npos ||
                      body.find("<body") != std::string::npos;
    if (metadata.source.empty()) metadata.source = url;
    return ingest_report(body, std::move(id), std::move(metadata), scheme, html);
}

DocumentMetadata metadata_from_json(const nlohmann::json& j) {
    try {
        DocumentMetadata m;
        m.company = j.at("company").get<std::string>();
        m.year = j.at("year").get<int>();
        m.language = language_from_string(j.value("language", "en"));
        m.source = j.value("source", "");
        m.title = j.value("title", "");
        if (m.company.empty()) throw FormatError("metadata company is empty");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed metadata: ") + e.what());
    }
}

nlohmann::json to_json(const DocumentMetadata& m) {
    nlohmann::json j = {{"company", m.company}, {"year", m.year}, {"language", to_string(m.language)}, {"source", m.source}};
    if (!m.title.empty()) j["title"] = m.title;
    return j;
}

FilterResult filter_question(const std::vector<const Document*>& docs) {
    FilterResult r;
    for (const auto* d : docs) r.combined_tokens += d->token_count;
    r.accepted = r.combined_tokens <= kMaxCombinedTokens;
    return r;
}

void read_jsonl(const std::filesystem::path& path, const std::function<void(const nlohmann::json&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
        try {
            fn(j);
        } catch (const Error& e) {
            throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const auto& r : rows) out << r.dump() << '\n';
    if (!out) throw ConfigError("failed writing " + path.string());
}

std::vector<Document> read_corpus(const std::filesystem::path& path) {
    std::vector<Document> docs;
    read_jsonl(path, [&](const nlohmann::json& j) { docs.push_back(document_from_json(j)); });
    std::unordered_set<std::string> seen;
    for (const auto& d : docs) {
        if (!seen.insert(d.id).second) throw FormatError(path.string() + ": duplicate document id " + d.id);
    }
    return docs;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
    std::vector<nlohmann::json> rows;
    rows.reserve(docs.size());
    for (const auto& d : docs) rows.push_back(to_json(d));
    write_jsonl(path, rows);
}

const Document& find_document(const std::vector<Document>& corpus, std::string_view id) {
    const auto it = std::find_if(corpus.begin(), corpus.end(), [&](const Document& d) { return d.id == id; });
    if (it == corpus.end()) throw ConfigError("unknown document id '" + std::string(id) + "'");
    return *it;
}

}  // namespace longqa::datagen
