#include "longqa/pai/property.hpp"

#include <algorithm>
#include <cctype>

#include "longqa/error.hpp"

namespace longqa::pai {

namespace {

constexpr std::string_view kSubQueryPrefix = "What was the ";
constexpr std::string_view kSubQueryMiddle = " of the ";
constexpr std::string_view kSubQuerySuffix = "?";

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string fold(std::string_view s) {
    std::string out = normalize_whitespace(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (const char c : text) {
        if (is_ws(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

Property Property::make(std::string_view metric, std::string_view subject) {
    Property p{normalize_whitespace(metric), normalize_whitespace(subject)};
    if (p.metric.empty()) throw PipelineError("property metric is empty");
    if (p.subject.empty()) throw PipelineError("property subject is empty");
    return p;
}

bool Property::same_as(const Property& other) const {
    return fold(metric) == fold(other.metric) && fold(subject) == fold(other.subject);
}

std::vector<Property> deduplicate(const std::vector<Property>& properties) {
    std::vector<Property> out;
    for (const auto& p : properties) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const Property& q) { return q.same_as(p); });
        if (!seen) out.push_back(p);
    }
    return out;
}

SubQuery render_sub_query(const Property& property) {
    std::string text;
    text.reserve(kSubQueryPrefix.size() + property.metric.size() + kSubQueryMiddle.size() + property.subject.size() + 1);
    text.append(kSubQueryPrefix).append(property.metric).append(kSubQueryMiddle).append(property.subject).append(kSubQuerySuffix);
    return {property, std::move(text)};
}

std::optional<Property> parse_sub_query(std::string_view text) {
    if (!text.starts_with(kSubQueryPrefix) || !text.ends_with(kSubQuerySuffix)) return std::nullopt;
    const std::string_view body = text.substr(kSubQueryPrefix.size(), text.size() - kSubQueryPrefix.size() - 1);
    const auto mid = body.find(kSubQueryMiddle);
    if (mid == std::string_view::npos) return std::nullopt;
    Property p{std::string(body.substr(0, mid)), std::string(body.substr(mid + kSubQueryMiddle.size()))};
    if (p.metric.empty() || p.subject.empty()) return std::nullopt;
    return p;
}

}  // namespace longqa::pai
