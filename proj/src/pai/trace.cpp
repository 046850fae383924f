#include "longqa/pai/trace.hpp"

#include <sstream>

namespace longqa::pai {

namespace {

constexpr std::string_view kPreamble = "This question demands further reasoning:";
constexpr std::string_view kOpen = "<reasoning>";
constexpr std::string_view kClose = "</reasoning>";
constexpr std::string_view kPropertiesHeader = "This question focuses on the key properties as follows:";
constexpr std::string_view kAnalysisHeader = "The analysis of the above properties is as follows:";
constexpr std::string_view kCompleted = "The reasoning steps have been completed.";
constexpr std::string_view kConclusion = "Conclusion: ";

constexpr std::string_view kMetricOpen = "{'metric': '";
constexpr std::string_view kSubjectSep = "', 'subject': '";
constexpr std::string_view kPropertyClose = "'}";

std::string property_line(const Property& p) {
    std::string line;
    line.append(kMetricOpen).append(p.metric).append(kSubjectSep).append(p.subject).append(kPropertyClose);
    return line;
}

std::string finding_prefix(const Property& p) { return "In " + p.subject + ", the " + p.metric + " is "; }

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (;;) {
        const auto nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (line.ends_with('\r')) line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string strip_conclusion(std::string_view rest) {
    if (rest.starts_with(kConclusion)) rest.remove_prefix(kConclusion.size());
    return std::string(rest);
}

}  // namespace

bool is_scalar_answer(std::string_view answer) {
    const std::string v = normalize_whitespace(answer);
    if (v.empty()) return false;
    for (const std::string_view end : {".", "!", "?", "\xE3\x80\x82", "\xEF\xBC\x81", "\xEF\xBC\x9F"}) {
        if (std::string_view(v).ends_with(end)) return false;
    }
    std::size_t words = 1;
    for (const char c : v) words += c == ' ';
    return words <= 8;
}

std::string finding_value(const Property* property, std::string_view sub_answer) {
    std::string v = normalize_whitespace(sub_answer);
    if (property) {
        const std::string prefix = finding_prefix(*property);
        if (v.size() > prefix.size() + 1 && v.starts_with(prefix) && v.ends_with('.')) {
            return v.substr(prefix.size(), v.size() - prefix.size() - 1);
        }
    }
    return v;
}

std::string finding_line(const Property* property, std::string_view sub_answer) {
    std::string v = normalize_whitespace(sub_answer);
    if (property && is_scalar_answer(v)) return finding_prefix(*property) + v + ".";
    return v;
}

std::string render_trace(const ReasoningTrace& trace) {
    std::string out;
    if (!trace.properties.empty() || !trace.findings.empty()) {
        const auto line = [&out](std::string_view s) { out.append(s).push_back('\n'); };
        line(kPreamble);
        line(kOpen);
        line(kPropertiesHeader);
        for (const auto& p : trace.properties) line(property_line(p));
        line(kAnalysisHeader);
        for (const auto& f : trace.findings) {
            const Property* p = f.sub_query.property ? &*f.sub_query.property : nullptr;
            line(finding_line(p, f.sub_answer));
        }
        line(kCompleted);
        line(kClose);
    }
    out.append(kConclusion).append(trace.conclusion);
    return out;
}

ReasoningTrace parse_trace(std::string_view text) {
    ReasoningTrace trace;
    const auto lines = split_lines(text);

    std::size_t open = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]) == kOpen) {
            open = i;
            break;
        }
    }
    if (open == lines.size()) {
        trace.conclusion = strip_conclusion(text);
        return trace;
    }
    std::size_t close = lines.size();
    for (std::size_t i = open + 1; i < lines.size(); ++i) {
        if (trim(lines[i]) == kClose) {
            close = i;
            break;
        }
    }
    if (close == lines.size()) {
        throw TraceParseError("reasoning block opened at line " + std::to_string(open + 1) + " is never closed",
                              open + 1);
    }

    enum class Section { preamble, properties, analysis, completed } section = Section::preamble;
    std::vector<std::string_view> finding_lines;
    for (std::size_t i = open + 1; i < close; ++i) {
        const std::string_view raw = lines[i];
        const std::string_view l = trim(raw);
        if (l == kPropertiesHeader) {
            section = Section::properties;
            continue;
        }
        if (l == kAnalysisHeader) {
            section = Section::analysis;
            continue;
        }
        if (l == kCompleted) {
            section = Section::completed;
            continue;
        }
        switch (section) {
            case Section::properties: {
                if (!l.starts_with(kMetricOpen) || !l.ends_with(kPropertyClose)) {
                    throw TraceParseError("line " + std::to_string(i + 1) + ": malformed property line", i + 1);
                }
                const auto body = l.substr(kMetricOpen.size(), l.size() - kMetricOpen.size() - kPropertyClose.size());
                const auto sep = body.find(kSubjectSep);
                if (sep == std::string_view::npos) {
                    throw TraceParseError("line " + std::to_string(i + 1) + ": property line lacks a subject", i + 1);
                }
                trace.properties.push_back(
                    {std::string(body.substr(0, sep)), std::string(body.substr(sep + kSubjectSep.size()))});
                break;
            }
            case Section::analysis:
                finding_lines.push_back(raw);
                break;
            default:
                if (!l.empty()) {
                    throw TraceParseError("line " + std::to_string(i + 1) + ": unexpected text in reasoning block",
                                          i + 1);
                }
        }
    }

    const bool paired = finding_lines.size() == trace.properties.size();
    for (std::size_t k = 0; k < finding_lines.size(); ++k) {
        Finding f;
        if (paired) {
            const Property& p = trace.properties[k];
            f.sub_query = render_sub_query(p);
            f.sub_answer = finding_value(&p, finding_lines[k]);
        } else {
            f.sub_answer = normalize_whitespace(finding_lines[k]);
        }
        trace.findings.push_back(std::move(f));
    }

    // Everything after the block, minus leading blank lines, is the conclusion.
    std::size_t first = close + 1;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    if (first < lines.size()) {
        const std::size_t offset = static_cast<std::size_t>(lines[first].data() - text.data());
        trace.conclusion = strip_conclusion(text.substr(offset));
    }
    return trace;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json property_json(const Property& p) { return {{"metric", p.metric}, {"subject", p.subject}}; }

Property property_from(const nlohmann::json& j) {
    return {j.at("metric").get<std::string>(), j.at("subject").get<std::string>()};
}

}  // namespace

nlohmann::json to_json(const ReasoningTrace& trace) {
    nlohmann::json properties = nlohmann::json::array();
    for (const auto& p : trace.properties) properties.push_back(property_json(p));
    nlohmann::json findings = nlohmann::json::array();
    for (const auto& f : trace.findings) {
        nlohmann::json sq = {{"text", f.sub_query.text}};
        if (f.sub_query.property) sq["property"] = property_json(*f.sub_query.property);
        nlohmann::json chunks = nlohmann::json::array();
        for (const auto& c : f.relevant_chunks) chunks.push_back({{"doc_id", c.doc_id}, {"index", c.index}});
        findings.push_back({{"sub_query", std::move(sq)}, {"relevant_chunks", std::move(chunks)}, {"sub_answer", f.sub_answer}});
    }
    return {{"query", trace.query},
            {"properties", std::move(properties)},
            {"findings", std::move(findings)},
            {"conclusion", trace.conclusion},
            {"account", gateway::to_json(trace.account)},
            {"rendered", render_trace(trace)}};
}

ReasoningTrace trace_from_json(const nlohmann::json& j) {
    try {
        ReasoningTrace trace;
        trace.query = j.value("query", "");
        for (const auto& p : j.at("properties")) trace.properties.push_back(property_from(p));
        for (const auto& fj : j.at("findings")) {
            Finding f;
            const auto& sq = fj.at("sub_query");
            f.sub_query.text = sq.value("text", "");
            if (sq.contains("property")) f.sub_query.property = property_from(sq["property"]);
            for (const auto& c : fj.value("relevant_chunks", nlohmann::json::array())) {
                f.relevant_chunks.push_back({c.at("doc_id").get<std::string>(), c.at("index").get<std::size_t>()});
            }
            f.sub_answer = fj.value("sub_answer", "");
            trace.findings.push_back(std::move(f));
        }
        trace.conclusion = j.at("conclusion").get<std::string>();
        if (j.contains("account")) trace.account = gateway::account_from_json(j["account"]);
        return trace;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed trace record: ") + e.what());
    }
}

}  // namespace longqa::pai
