#include "distill/tokenizer.hpp"

#include <algorithm>
#include <set>

#include "distill/errors.hpp"

namespace distill {

namespace {

bool overlaps(const ByteSpan& a, const ByteSpan& b) {
    return a.begin < b.end && b.begin < a.end;
}

std::vector<bool> flag_content(const std::vector<ByteSpan>& spans,
                               const std::vector<ByteSpan>& special_regions) {
    std::vector<bool> flags(spans.size(), true);
    for (std::size_t i = 0; i < spans.size(); ++i)
        for (const ByteSpan& region : special_regions)
            if (overlaps(spans[i], region)) {
                flags[i] = false;
                break;
            }
    return flags;
}

int alphabet_index(const std::string& alphabet, char c) {
    const auto pos = alphabet.find(c);
    if (pos == std::string::npos)
        throw ConfigError(std::string("byte '") + c + "' not in the alphabet");
    return static_cast<int>(pos);
}

} // namespace

MergeVocab::MergeVocab(std::string alphabet, MergeTable merges)
    : alphabet_(std::move(alphabet)), merges_(std::move(merges)) {
    if (alphabet_.empty()) throw ConfigError("empty tokenizer alphabet");
    std::set<char> seen_bytes(alphabet_.begin(), alphabet_.end());
    if (seen_bytes.size() != alphabet_.size())
        throw ConfigError("tokenizer alphabet has duplicate bytes");
    std::set<std::string> formed;
    for (char c : alphabet_) {
        strings_.emplace_back(1, c);
        formed.insert(strings_.back());
    }
    for (const auto& [left, right] : merges_) {
        if (!formed.count(left) || !formed.count(right))
            throw ConfigError("merge (" + left + ", " + right +
                              ") references a token that is never formed");
        const std::string product = left + right;
        if (formed.count(product))
            throw ConfigError("merge produces duplicate token " + product);
        strings_.push_back(product);
        formed.insert(product);
    }
}

Token MergeVocab::id_of(const std::string& s) const {
    for (std::size_t i = 0; i < strings_.size(); ++i)
        if (strings_[i] == s) return static_cast<Token>(i);
    throw ConfigError("unknown token string " + s);
}

TokenizedText tokenize_char(const std::string& bytes, const std::string& alphabet,
                            const std::vector<ByteSpan>& special_regions) {
    if (bytes.empty()) throw PreconditionError("cannot tokenize empty text");
    TokenizedText out;
    out.bytes = bytes;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        out.tokens.push_back(alphabet_index(alphabet, bytes[i]));
        out.spans.push_back({i, i + 1});
    }
    out.content_flags = flag_content(out.spans, special_regions);
    return out;
}

TokenizedText tokenize_merges(const std::string& bytes, const MergeVocab& vocab,
                              const std::vector<ByteSpan>& special_regions) {
    if (bytes.empty()) throw PreconditionError("cannot tokenize empty text");
    for (char c : bytes) alphabet_index(vocab.alphabet(), c);

    struct Piece {
        std::string text;
        ByteSpan span;
    };
    std::vector<Piece> pieces;
    for (std::size_t i = 0; i < bytes.size(); ++i)
        pieces.push_back({std::string(1, bytes[i]), {i, i + 1}});

    // One left-to-right scan per rule; a merge consumes both pieces and the
    // scan resumes after the merged piece.
    for (const auto& [left, right] : vocab.merges()) {
        std::vector<Piece> next;
        std::size_t i = 0;
        while (i < pieces.size()) {
            if (i + 1 < pieces.size() && pieces[i].text == left &&
                pieces[i + 1].text == right) {
                next.push_back({left + right,
                                {pieces[i].span.begin, pieces[i + 1].span.end}});
                i += 2;
            } else {
                next.push_back(pieces[i]);
                ++i;
            }
        }
        pieces = std::move(next);
    }

    TokenizedText out;
    out.bytes = bytes;
    for (const Piece& piece : pieces) {
        out.tokens.push_back(vocab.id_of(piece.text));
        out.spans.push_back(piece.span);
    }
    out.content_flags = flag_content(out.spans, special_regions);
    return out;
}

} // namespace distill
