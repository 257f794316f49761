#include "distill/chunkalign.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "distill/errors.hpp"

namespace distill {

namespace {

// Byte membership of the content region: union of content-token spans.
std::vector<bool> content_bytes(const TokenizedText& text) {
    std::vector<bool> mask(text.bytes.size(), false);
    for (std::size_t i = 0; i < text.size(); ++i)
        if (text.content_flags[i])
            for (std::size_t b = text.spans[i].begin; b < text.spans[i].end; ++b)
                mask[b] = true;
    return mask;
}

} // namespace

ChunkTable align_chunks(const TokenizedText& student, const TokenizedText& teacher) {
    if (student.bytes != teacher.bytes)
        throw AlignmentError("tokenizations cover different byte strings");
    const std::vector<bool> content_s = content_bytes(student);
    const std::vector<bool> content_t = content_bytes(teacher);
    if (content_s != content_t)
        throw AlignmentError("content regions differ between the two sides");

    // Common token boundaries restricted to content tokens.
    auto boundary_set = [](const TokenizedText& text) {
        std::set<std::size_t> bounds;
        for (std::size_t i = 0; i < text.size(); ++i)
            if (text.content_flags[i]) {
                bounds.insert(text.spans[i].begin);
                bounds.insert(text.spans[i].end);
            }
        return bounds;
    };
    const std::set<std::size_t> bounds_s = boundary_set(student);
    const std::set<std::size_t> bounds_t = boundary_set(teacher);
    std::vector<std::size_t> common;
    std::set_intersection(bounds_s.begin(), bounds_s.end(), bounds_t.begin(),
                          bounds_t.end(), std::back_inserter(common));

    ChunkTable table;
    // Walk maximal contiguous content runs; the endpoints of each run are
    // token boundaries on both sides, so every run yields >= 1 chunk.
    std::size_t b = 0;
    const std::size_t n = content_s.size();
    while (b < n) {
        if (!content_s[b]) {
            ++b;
            continue;
        }
        std::size_t run_end = b;
        while (run_end < n && content_s[run_end]) ++run_end;
        std::vector<std::size_t> cuts;
        for (std::size_t off : common)
            if (off >= b && off <= run_end) cuts.push_back(off);
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            table.chunk_spans.push_back({cuts[k], cuts[k + 1]});
        b = run_end;
    }

    table.student_members.resize(table.size());
    table.teacher_members.resize(table.size());
    auto assign = [&](const TokenizedText& text,
                      std::vector<std::vector<int>>& members) {
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (!text.content_flags[i]) continue;
            bool placed = false;
            for (std::size_t c = 0; c < table.size(); ++c) {
                if (text.spans[i].begin >= table.chunk_spans[c].begin &&
                    text.spans[i].end <= table.chunk_spans[c].end) {
                    members[c].push_back(static_cast<int>(i));
                    placed = true;
                    break;
                }
            }
            if (!placed)
                throw AlignmentError("content token " + std::to_string(i) +
                                     " fits no chunk");
        }
    };
    assign(student, table.student_members);
    assign(teacher, table.teacher_members);
    for (std::size_t c = 0; c < table.size(); ++c)
        if (table.student_members[c].empty() || table.teacher_members[c].empty())
            throw AlignmentError("chunk " + std::to_string(c) +
                                 " lacks members on one side");
    return table;
}

std::pair<AlignmentMatrix, AlignmentMatrix> build_matrices(
    const ChunkTable& table, std::size_t student_len, std::size_t teacher_len) {
    auto build = [&](const std::vector<std::vector<int>>& members,
                     std::size_t len) {
        AlignmentMatrix m;
        m.rows = len;
        m.cols = table.size();
        m.entries.assign(m.rows * m.cols, 0);
        for (std::size_t c = 0; c < members.size(); ++c)
            for (int tok : members[c]) {
                if (tok < 0 || static_cast<std::size_t>(tok) >= len)
                    throw PreconditionError("member token index out of range");
                m.entries[static_cast<std::size_t>(tok) * m.cols + c] = 1;
            }
        return m;
    };
    return {build(table.student_members, student_len),
            build(table.teacher_members, teacher_len)};
}

std::vector<double> chunk_logprobs(const std::vector<double>& token_logprobs,
                                   const AlignmentMatrix& matrix) {
    if (token_logprobs.size() != matrix.rows)
        throw PreconditionError("log-prob vector length != matrix row count");
    std::vector<double> lp(matrix.cols, 0.0);
    for (std::size_t r = 0; r < matrix.rows; ++r)
        for (std::size_t c = 0; c < matrix.cols; ++c)
            if (matrix.at(r, c)) lp[c] += token_logprobs[r];
    return lp;
}

ChunkProbs chunk_probs(const std::vector<double>& log_probs, double temperature) {
    if (!(temperature > 0.0)) throw PreconditionError("temperature must be positive");
    ChunkProbs out;
    out.temperature = temperature;
    out.log_probs = log_probs;
    out.probs.reserve(log_probs.size());
    for (double lp : log_probs) out.probs.push_back(std::exp(lp / temperature));
    return out;
}

std::vector<int> active_chunks(const ChunkTable& table,
                               const std::vector<int>& student_mask) {
    std::set<int> masked(student_mask.begin(), student_mask.end());
    std::vector<int> active;
    for (std::size_t c = 0; c < table.size(); ++c)
        for (int tok : table.student_members[c])
            if (masked.count(tok)) {
                active.push_back(static_cast<int>(c));
                break;
            }
    return active;
}

std::vector<int> project_mask(const TokenizedText& student,
                              const std::vector<int>& student_mask,
                              const TokenizedText& teacher) {
    std::vector<int> projected;
    for (std::size_t j = 0; j < teacher.size(); ++j) {
        const ByteSpan& tspan = teacher.spans[j];
        for (int pos : student_mask) {
            if (pos < 0 || static_cast<std::size_t>(pos) >= student.size())
                throw PreconditionError("mask position out of student range");
            const ByteSpan& sspan = student.spans[pos];
            if (sspan.begin < tspan.end && tspan.begin < sspan.end) {
                projected.push_back(static_cast<int>(j));
                break;
            }
        }
    }
    return projected;
}

} // namespace distill
