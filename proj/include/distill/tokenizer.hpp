#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "distill/core.hpp"

namespace distill {

struct ByteSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open
    bool operator==(const ByteSpan&) const = default;
};

// A byte string with one tokenization over it. Spans are contiguous, sorted,
// non-empty and tile [0, bytes.size()) exactly. content_flags marks tokens
// outside any declared special-marker region.
struct TokenizedText {
    std::string bytes;
    Tokens tokens;
    std::vector<ByteSpan> spans;
    std::vector<bool> content_flags;

    std::size_t size() const { return tokens.size(); }
};

// Ordered byte-pair merge list; each side must be a single byte of the
// alphabet or the product of an earlier merge.
using MergeTable = std::vector<std::pair<std::string, std::string>>;

// Maps token strings to ids: single bytes of `alphabet` first (id = index),
// then one id per merge in table order.
class MergeVocab {
public:
    MergeVocab(std::string alphabet, MergeTable merges);

    int size() const { return static_cast<int>(strings_.size()); }
    const std::string& string_of(Token id) const { return strings_[id]; }
    Token id_of(const std::string& s) const;
    const std::string& alphabet() const { return alphabet_; }
    const MergeTable& merges() const { return merges_; }

private:
    std::string alphabet_;
    MergeTable merges_;
    std::vector<std::string> strings_;
};

// One token per byte; token id = index of the byte in `alphabet`.
TokenizedText tokenize_char(const std::string& bytes, const std::string& alphabet,
                            const std::vector<ByteSpan>& special_regions = {});

// Greedy left-to-right application of the merge table, in table order, over
// the char tokenization. Spans tile the byte string exactly.
TokenizedText tokenize_merges(const std::string& bytes, const MergeVocab& vocab,
                              const std::vector<ByteSpan>& special_regions = {});

} // namespace distill
