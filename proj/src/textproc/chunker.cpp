#include "longqa/textproc/chunker.hpp"

#include <algorithm>

#include "longqa/textproc/utf8.hpp"

namespace longqa {

namespace {

enum class Level { paragraph, sentence, whitespace, code_point };

Level finer(Level level) {
    switch (level) {
        case Level::paragraph: return Level::sentence;
        case Level::sentence: return Level::whitespace;
        default: return Level::code_point;
    }
}

bool is_space_byte(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Byte length of a whitespace sequence starting at i (ASCII whitespace and
// U+3000 IDEOGRAPHIC SPACE), or 0.
std::size_t space_at(std::string_view t, std::size_t i) {
    if (i >= t.size()) return 0;
    if (is_space_byte(t[i])) return 1;
    if (t.compare(i, 3, "\xE3\x80\x80") == 0) return 3;
    return 0;
}

std::size_t skip_spaces(std::string_view t, std::size_t i, std::size_t end) {
    while (i < end) {
        const std::size_t w = space_at(t, i);
        if (w == 0) break;
        i += w;
    }
    return i;
}

// Full-width terminators: 。！？；
bool cjk_terminator_at(std::string_view t, std::size_t i) {
    return t.compare(i, 3, "\xE3\x80\x82") == 0 || t.compare(i, 3, "\xEF\xBC\x81") == 0 ||
           t.compare(i, 3, "\xEF\xBC\x9F") == 0 || t.compare(i, 3, "\xEF\xBC\x9B") == 0;
}

// Cut points strictly inside (begin, end) for the given level. Each unit
// carries its trailing separator so units tile the range exactly.
std::vector<std::size_t> cut_points(std::string_view t, std::size_t begin, std::size_t end, Level level) {
    std::vector<std::size_t> cuts;
    const auto add = [&](std::size_t pos) {
        if (pos > begin && pos < end && (cuts.empty() || cuts.back() < pos)) cuts.push_back(pos);
    };
    std::size_t i = begin;
    switch (level) {
        case Level::paragraph:
            while (i < end) {
                if (t[i] != '\n' && t[i] != '\r') {
                    ++i;
                    continue;
                }
                std::size_t j = i;
                int newlines = 0;
                while (j < end && (t[j] == '\n' || t[j] == '\r')) newlines += t[j++] == '\n';
                if (newlines >= 2) add(j);
                i = j;
            }
            break;
        case Level::sentence:
            while (i < end) {
                const char c = t[i];
                if (c == '\n') {
                    add(i + 1);
                    ++i;
                } else if ((c == '.' || c == '!' || c == '?') && space_at(t, i + 1) > 0) {
                    i = skip_spaces(t, i + 1, end);
                    add(i);
                } else if (cjk_terminator_at(t, i)) {
                    i = skip_spaces(t, i + 3, end);
                    add(i);
                } else {
                    ++i;
                }
            }
            break;
        case Level::whitespace:
            while (i < end) {
                if (space_at(t, i) > 0) {
                    i = skip_spaces(t, i, end);
                    add(i);
                } else {
                    ++i;
                }
            }
            break;
        case Level::code_point:
            for (i = begin + 1; i < end; ++i) {
                if (utf8::is_boundary(t, i)) add(i);
            }
            break;
    }
    return cuts;
}

class Packer {
public:
    Packer(std::string_view text, std::size_t budget, const TokenScheme& scheme)
        : text_(text), budget_(budget), scheme_(scheme) {}

    void pack(std::size_t begin, std::size_t end, Level level) {
        std::vector<std::size_t> ends = cut_points(text_, begin, end, level);
        ends.push_back(end);
        const std::size_t units = ends.size();

        std::size_t pos = begin;
        std::size_t i = 0;
        while (i < units) {
            if (!fits(pos, ends[i])) {
                if (level == Level::code_point) {
                    // A single code point over budget is indivisible.
                    ranges_.emplace_back(pos, ends[i]);
                } else {
                    pack(pos, ends[i], finer(level));
                }
                pos = ends[i++];
                continue;
            }
            // Furthest unit end that still fits: gallop, then bisect.
            std::size_t lo = i;
            std::size_t step = 1;
            while (lo + step < units && fits(pos, ends[lo + step])) {
                lo += step;
                step *= 2;
            }
            std::size_t hi = std::min(lo + step, units);
            while (hi - lo > 1) {
                const std::size_t mid = lo + (hi - lo) / 2;
                if (fits(pos, ends[mid])) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            ranges_.emplace_back(pos, ends[lo]);
            pos = ends[lo];
            i = lo + 1;
        }
    }

    const std::vector<std::pair<std::size_t, std::size_t>>& ranges() const { return ranges_; }

private:
    bool fits(std::size_t begin, std::size_t end) const {
        return scheme_.count(text_.substr(begin, end - begin)) <= budget_;
    }

    std::string_view text_;
    std::size_t budget_;
    const TokenScheme& scheme_;
    std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

}  // namespace

std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_tokens, const TokenScheme& scheme) {
    if (max_tokens == 0) max_tokens = 1;
    std::vector<Chunk> chunks;
    const std::string_view text = doc.text;
    if (text.empty()) return chunks;

    Packer packer(text, max_tokens, scheme);
    packer.pack(0, text.size(), Level::paragraph);

    chunks.reserve(packer.ranges().size());
    for (const auto& [begin, end] : packer.ranges()) {
        Chunk c;
        c.doc_id = doc.id;
        c.index = chunks.size();
        c.text.assign(text.substr(begin, end - begin));
        c.begin = begin;
        c.end = end;
        c.token_count = scheme.count(c.text);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

}  // namespace longqa
