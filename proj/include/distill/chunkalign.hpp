#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "distill/core.hpp"
#include "distill/tokenizer.hpp"

namespace distill {

// Byte-level chunking of two tokenizations of the same text: chunk
// boundaries are the token-boundary byte offsets common to both sides
// within the content region, which makes the chunks the finest common
// coarsening of the two tokenizations.
struct ChunkTable {
    std::vector<ByteSpan> chunk_spans;
    std::vector<std::vector<int>> student_members;  // token indices per chunk
    std::vector<std::vector<int>> teacher_members;

    std::size_t size() const { return chunk_spans.size(); }
};

// Binary token-to-chunk assignment, row-major (rows = tokens, cols = chunks).
// Content-token rows have exactly one 1; special-token rows are all zeros.
struct AlignmentMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> entries;

    std::uint8_t at(std::size_t r, std::size_t c) const {
        return entries[r * cols + c];
    }
};

// Chunk probabilities derived from summed member log-probs by temperature
// scaling: probs = exp(log_probs / temperature). Raw values are preserved;
// clamping happens only where a value enters a logarithm downstream.
struct ChunkProbs {
    std::vector<double> log_probs;
    std::vector<double> probs;
    double temperature = 1.0;
};

ChunkTable align_chunks(const TokenizedText& student, const TokenizedText& teacher);

std::pair<AlignmentMatrix, AlignmentMatrix> build_matrices(
    const ChunkTable& table, std::size_t student_len, std::size_t teacher_len);

// LP = lp . A, i.e. per chunk the sum of its member tokens' log-probs.
std::vector<double> chunk_logprobs(const std::vector<double>& token_logprobs,
                                   const AlignmentMatrix& matrix);

ChunkProbs chunk_probs(const std::vector<double>& log_probs, double temperature);

// Indices of chunks with at least one masked student member.
std::vector<int> active_chunks(const ChunkTable& table,
                               const std::vector<int>& student_mask);

// Teacher token indices whose byte span intersects the byte span of any
// masked student token.
std::vector<int> project_mask(const TokenizedText& student,
                              const std::vector<int>& student_mask,
                              const TokenizedText& teacher);

} // namespace distill
