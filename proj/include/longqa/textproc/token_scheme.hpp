#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace longqa {

// Byte-sequence -> merge rank table in the public "<base64> <rank>" layout.
class BpeRanks {
public:
    // Throws ConfigError on malformed lines or when the table is empty.
    static std::shared_ptr<const BpeRanks> load(const std::filesystem::path& path);
    static std::shared_ptr<const BpeRanks> parse(std::istream& in, const std::string& origin);

    std::size_t size() const noexcept { return ranks_.size(); }
    const std::string& origin() const noexcept { return origin_; }

    // Number of BPE tokens for a single pre-tokenized piece.
    std::size_t count_piece(std::string_view piece) const;

private:
    std::unordered_map<std::string, std::uint32_t> ranks_;
    std::string origin_;
};

// Splits text into the pieces BPE runs on, following the o200k pre-tokenizer
// rules. Exact for ASCII and CJK text; other scripts use an approximate
// Unicode category table.
std::vector<std::string_view> pretokenize(std::string_view text);

enum class SchemeKind { heuristic, bpe };

// The token counter every module measures text with. Cheap to copy.
class TokenScheme {
public:
    // ceil(bytes / bytes_per_token).
    static TokenScheme heuristic(std::size_t bytes_per_token = 4);
    static TokenScheme bpe(std::shared_ptr<const BpeRanks> ranks);
    static TokenScheme bpe_from_file(const std::filesystem::path& rank_file);

    // {"kind": "heuristic", "bytes_per_token": 4} or {"kind": "bpe", "rank_file": "..."}
    static TokenScheme from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    SchemeKind kind() const noexcept { return kind_; }
    // Short label recorded next to counts, e.g. "heuristic/4" or "bpe/o200k_base.tiktoken".
    std::string label() const;

    std::size_t count(std::string_view text) const;

private:
    TokenScheme() = default;

    SchemeKind kind_ = SchemeKind::heuristic;
    std::size_t bytes_per_token_ = 4;
    std::shared_ptr<const BpeRanks> ranks_;
};

inline std::size_t count_tokens(std::string_view text, const TokenScheme& scheme) {
    return scheme.count(text);
}

}  // namespace longqa
