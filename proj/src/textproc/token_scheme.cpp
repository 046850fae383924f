#include "longqa/textproc/token_scheme.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include <openssl/evp.h>

#include "longqa/error.hpp"
#include "longqa/textproc/utf8.hpp"

namespace longqa {

namespace {

std::string decode_base64(std::string_view in, bool& ok) {
    std::string out(3 * ((in.size() + 3) / 4), '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(in.data()),
                                  static_cast<int>(in.size()));
    ok = n >= 0 && in.size() % 4 == 0;
    if (!ok) return {};
    std::size_t len = static_cast<std::size_t>(n);
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    if (!in.empty() && in.back() == '=') --len;
    if (in.size() > 1 && in[in.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

// Coarse Unicode general-category classes used by the pre-tokenizer.
enum class Cat : std::uint8_t { upper, lower, other_letter, number, space, other };

Cat classify(char32_t c) {
    if (c < 0x80) {
        if (c >= 'A' && c <= 'Z') return Cat::upper;
        if (c >= 'a' && c <= 'z') return Cat::lower;
        if (c >= '0' && c <= '9') return Cat::number;
        if (c == ' ' || (c >= 0x09 && c <= 0x0D)) return Cat::space;
        return Cat::other;
    }
    if (c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
        c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000)
        return Cat::space;
    if (c < 0x100) {
        if (c == 0xAA || c == 0xBA) return Cat::other_letter;
        if (c == 0xB5) return Cat::lower;
        if (c == 0xB2 || c == 0xB3 || c == 0xB9 || (c >= 0xBC && c <= 0xBE)) return Cat::number;
        if (c < 0xC0 || c == 0xD7 || c == 0xF7) return Cat::other;
        return c <= 0xDE ? Cat::upper : Cat::lower;
    }
    if (c < 0x180) return (c % 2 == 0) ? Cat::upper : Cat::lower;
    if (c < 0x2B0) return Cat::lower;
    if (c < 0x300) return Cat::other_letter;
    if (c < 0x370) return Cat::other_letter;  // combining marks
    if (c < 0x400) {
        if (c >= 0x391 && c <= 0x3A9) return Cat::upper;
        return Cat::lower;
    }
    if (c < 0x500) {
        if (c < 0x430) return Cat::upper;
        if (c < 0x460) return Cat::lower;
        return (c % 2 == 0) ? Cat::upper : Cat::lower;
    }
    if ((c >= 0x660 && c <= 0x669) || (c >= 0x6F0 && c <= 0x6F9) || (c >= 0x966 && c <= 0x96F))
        return Cat::number;
    if (c >= 0x2000 && c < 0x2070) return Cat::other;
    if (c >= 0x2070 && c < 0x20A0) return Cat::number;
    if (c >= 0x20A0 && c < 0x2150) return Cat::other;
    if (c >= 0x2150 && c < 0x2190) return Cat::number;
    if (c >= 0x2190 && c < 0x2C00) return Cat::other;
    if (c >= 0x3000 && c < 0x3040) {
        if (c == 0x3005 || c == 0x3006) return Cat::other_letter;
        if (c == 0x3007 || (c >= 0x3021 && c <= 0x3029)) return Cat::number;
        if (c >= 0x302A && c <= 0x302F) return Cat::other_letter;
        return Cat::other;
    }
    if (c >= 0x3040 && c < 0x3100) {
        if (c == 0x30A0 || c == 0x30FB || c == 0x309B || c == 0x309C) return Cat::other;
        return Cat::other_letter;
    }
    if (c >= 0xE000 && c < 0xF900) return Cat::other;
    if (c >= 0xFE00 && c < 0xFE10) return Cat::other_letter;
    if (c >= 0xFE10 && c < 0xFE70) return Cat::other;
    if (c >= 0xFF00 && c < 0xFF66) {
        if (c >= 0xFF10 && c <= 0xFF19) return Cat::number;
        if (c >= 0xFF21 && c <= 0xFF3A) return Cat::upper;
        if (c >= 0xFF41 && c <= 0xFF5A) return Cat::lower;
        return Cat::other;
    }
    if (c >= 0xFFE0 && c < 0xFFF0) return Cat::other;
    if (c >= 0x1F000 && c < 0x1FB00) return Cat::other;
    return Cat::other_letter;
}

struct CodePoint {
    char32_t value;
    Cat cat;
    std::size_t offset;
};

bool is_letter(Cat c) { return c == Cat::upper || c == Cat::lower || c == Cat::other_letter; }
bool upper_class(Cat c) { return c == Cat::upper || c == Cat::other_letter; }
bool lower_class(Cat c) { return c == Cat::lower || c == Cat::other_letter; }
bool is_crlf(char32_t c) { return c == '\r' || c == '\n'; }

// Matches the optional ('s|'t|'re|'ve|'m|'ll|'d) suffix, case-insensitively.
std::size_t contraction(const std::vector<CodePoint>& cps, std::size_t j) {
    const std::size_t n = cps.size();
    if (j >= n || cps[j].value != '\'') return 0;
    auto lower_at = [&](std::size_t k) -> char32_t {
        if (k >= n) return 0;
        const char32_t c = cps[k].value;
        return (c >= 'A' && c <= 'Z') ? c + 32 : c;
    };
    const char32_t a = lower_at(j + 1);
    const char32_t b = lower_at(j + 2);
    if (a == 's' || a == 't' || a == 'm' || a == 'd') return 2;
    if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l')) return 3;
    return 0;
}

// One step of the o200k split pattern; returns the end index of the match at i.
std::size_t match_at(const std::vector<CodePoint>& cps, std::size_t i) {
    const std::size_t n = cps.size();
    const auto prefix_ok = [&](std::size_t k) {
        return !is_crlf(cps[k].value) && !is_letter(cps[k].cat) && cps[k].cat != Cat::number;
    };
    const std::size_t j = prefix_ok(i) ? i + 1 : i;

    // [^\r\n\p{L}\p{N}]?[Lu Lt Lm Lo M]*[Ll Lm Lo M]+ contraction?
    {
        std::size_t k = j;
        while (k < n && upper_class(cps[k].cat)) ++k;
        for (std::size_t u = k + 1; u-- > j;) {
            if (u < n && lower_class(cps[u].cat)) {
                std::size_t e = u;
                while (e < n && lower_class(cps[e].cat)) ++e;
                return e + contraction(cps, e);
            }
        }
    }
    // [^\r\n\p{L}\p{N}]?[Lu Lt Lm Lo M]+[Ll Lm Lo M]* contraction?
    {
        std::size_t k = j;
        while (k < n && upper_class(cps[k].cat)) ++k;
        if (k > j) {
            while (k < n && lower_class(cps[k].cat)) ++k;
            return k + contraction(cps, k);
        }
    }
    // \p{N}{1,3}
    if (cps[i].cat == Cat::number) {
        std::size_t k = i;
        while (k < n && k < i + 3 && cps[k].cat == Cat::number) ++k;
        return k;
    }
    //  ?[^\s\p{L}\p{N}]+[\r\n/]*
    {
        const auto punct = [&](std::size_t k) {
            return cps[k].cat != Cat::space && !is_letter(cps[k].cat) && cps[k].cat != Cat::number;
        };
        std::size_t k = (cps[i].value == ' ' && i + 1 < n && punct(i + 1)) ? i + 1 : i;
        const std::size_t start = k;
        while (k < n && punct(k)) ++k;
        if (k > start) {
            while (k < n && (is_crlf(cps[k].value) || cps[k].value == '/')) ++k;
            return k;
        }
    }
    if (cps[i].cat == Cat::space) {
        std::size_t k = i;
        while (k < n && cps[k].cat == Cat::space) ++k;
        // \s*[\r\n]+
        for (std::size_t p = k; p-- > i;) {
            if (is_crlf(cps[p].value)) return p + 1;
        }
        // \s+(?!\S)
        if (k == n) return k;
        if (k - 1 > i) return k - 1;
        // \s+
        return k;
    }
    return i + 1;
}

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text) {
    std::vector<CodePoint> cps;
    cps.reserve(text.size());
    for (std::size_t pos = 0; pos < text.size();) {
        const std::size_t at = pos;
        const char32_t c = utf8::decode(text, pos);
        cps.push_back({c, classify(c), at});
    }
    std::vector<std::string_view> pieces;
    const auto offset = [&](std::size_t idx) { return idx < cps.size() ? cps[idx].offset : text.size(); };
    for (std::size_t i = 0; i < cps.size();) {
        const std::size_t e = match_at(cps, i);
        pieces.push_back(text.substr(offset(i), offset(e) - offset(i)));
        i = e;
    }
    return pieces;
}

// ---------------------------------------------------------------------------
// BpeRanks

std::shared_ptr<const BpeRanks> BpeRanks::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open BPE rank file: " + path.string());
    return parse(in, path.string());
}

std::shared_ptr<const BpeRanks> BpeRanks::parse(std::istream& in, const std::string& origin) {
    auto ranks = std::make_shared<BpeRanks>();
    ranks->origin_ = origin;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto space = line.find(' ');
        bool ok = space != std::string::npos;
        std::string bytes;
        long long rank = -1;
        if (ok) bytes = decode_base64(std::string_view(line).substr(0, space), ok);
        if (ok) {
            try {
                std::size_t used = 0;
                rank = std::stoll(line.substr(space + 1), &used);
                ok = used == line.size() - space - 1 && rank >= 0 &&
                     rank <= std::numeric_limits<std::uint32_t>::max() && !bytes.empty();
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed BPE rank line");
        }
        ranks->ranks_.emplace(std::move(bytes), static_cast<std::uint32_t>(rank));
    }
    if (ranks->ranks_.empty()) throw ConfigError("BPE rank table is empty: " + origin);
    return ranks;
}

std::size_t BpeRanks::count_piece(std::string_view piece) const {
    if (piece.empty()) return 0;
    const auto rank_of = [this](std::string_view bytes) -> std::uint32_t {
        const auto it = ranks_.find(std::string(bytes));
        return it == ranks_.end() ? std::numeric_limits<std::uint32_t>::max() : it->second;
    };
    if (piece.size() == 1 || rank_of(piece) != std::numeric_limits<std::uint32_t>::max()) return 1;

    // Repeatedly merge the lowest-ranked adjacent pair (leftmost on ties).
    // Linked list of part starts plus a lazily invalidated min-heap.
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    const std::size_t n = piece.size();
    std::vector<std::size_t> next(n), prev(n);
    std::vector<std::uint32_t> version(n, 0);
    std::vector<bool> alive(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        next[i] = i + 1 < n ? i + 1 : none;
        prev[i] = i > 0 ? i - 1 : none;
    }
    struct Candidate {
        std::uint32_t rank;
        std::size_t left;
        std::uint32_t left_version;
        std::uint32_t right_version;
        bool operator>(const Candidate& o) const {
            return rank != o.rank ? rank > o.rank : left > o.left;
        }
    };
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
    const auto push = [&](std::size_t left) {
        if (left == none || next[left] == none) return;
        const std::size_t right = next[left];
        const std::size_t end = next[right] == none ? n : next[right];
        const std::uint32_t r = rank_of(piece.substr(left, end - left));
        if (r != std::numeric_limits<std::uint32_t>::max()) {
            heap.push({r, left, version[left], version[right]});
        }
    };
    for (std::size_t i = 0; i + 1 < n; ++i) push(i);

    std::size_t parts = n;
    while (!heap.empty()) {
        const Candidate c = heap.top();
        heap.pop();
        if (!alive[c.left] || version[c.left] != c.left_version) continue;
        const std::size_t right = next[c.left];
        if (right == none || version[right] != c.right_version) continue;
        alive[right] = false;
        next[c.left] = next[right];
        if (next[right] != none) prev[next[right]] = c.left;
        ++version[c.left];
        ++version[right];
        --parts;
        push(c.left);
        if (prev[c.left] != none) push(prev[c.left]);
    }
    return parts;
}

// ---------------------------------------------------------------------------
// TokenScheme

TokenScheme TokenScheme::heuristic(std::size_t bytes_per_token) {
    if (bytes_per_token == 0) throw ConfigError("bytes_per_token must be positive");
    TokenScheme s;
    s.kind_ = SchemeKind::heuristic;
    s.bytes_per_token_ = bytes_per_token;
    return s;
}

TokenScheme TokenScheme::bpe(std::shared_ptr<const BpeRanks> ranks) {
    if (!ranks || ranks->size() == 0) throw ConfigError("BPE scheme requires a non-empty rank table");
    TokenScheme s;
    s.kind_ = SchemeKind::bpe;
    s.ranks_ = std::move(ranks);
    return s;
}

TokenScheme TokenScheme::bpe_from_file(const std::filesystem::path& rank_file) {
    return bpe(BpeRanks::load(rank_file));
}

TokenScheme TokenScheme::from_json(const nlohmann::json& j) {
    const std::string kind = j.value("kind", "heuristic");
    if (kind == "heuristic") return heuristic(j.value("bytes_per_token", std::size_t{4}));
    if (kind == "bpe") {
        if (!j.contains("rank_file")) throw ConfigError("bpe token scheme requires rank_file");
        return bpe_from_file(j.at("rank_file").get<std::string>());
    }
    throw ConfigError("unknown token scheme kind: " + kind);
}

nlohmann::json TokenScheme::to_json() const {
    if (kind_ == SchemeKind::heuristic) return {{"kind", "heuristic"}, {"bytes_per_token", bytes_per_token_}};
    return {{"kind", "bpe"}, {"rank_file", ranks_->origin()}};
}

std::string TokenScheme::label() const {
    if (kind_ == SchemeKind::heuristic) return "heuristic/" + std::to_string(bytes_per_token_);
    return "bpe/" + std::filesystem::path(ranks_->origin()).filename().string();
}

std::size_t TokenScheme::count(std::string_view text) const {
    if (kind_ == SchemeKind::heuristic) return (text.size() + bytes_per_token_ - 1) / bytes_per_token_;
    std::size_t total = 0;
    for (const auto piece : pretokenize(text)) total += ranks_->count_piece(piece);
    return total;
}

}  // namespace longqa
