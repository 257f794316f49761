#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "distill/core.hpp"

namespace distill {

// A clean sequence together with its corruption at diffusion timestep t.
// Positions in `mask_set` hold kMaskToken in `corrupted`; all others hold
// the clean token. `timestep` always carries the t the view was built at,
// even after reveals (the effective timestep of a revealed view is lower
// but is not recomputed).
struct NoisedView {
    Tokens clean;
    double timestep = 0.0;
    std::vector<int> mask_set;  // sorted, unique
    Tokens corrupted;
};

// Complementary partition of a mask set. |part_a| = round_half_even(rho*|M|).
struct SplitMasks {
    std::vector<int> part_a;
    std::vector<int> part_b;
    double rho = 0.5;
};

// Teacher outputs merged from demonstration-conditioned passes. `logits` is
// defined exactly on the mask set of the originating view.
struct MergedTeacherOutput {
    PositionVectors logits;
    int pass_count = 0;
};

// Evaluates a teacher on a view, returning one logit (or log-prob) vector
// per masked position.
using TeacherEval = std::function<PositionVectors(const NoisedView&)>;

// Builds a view from explicit parts, validating the NoisedView invariants.
NoisedView make_view(Tokens clean, double timestep, std::vector<int> mask_set,
                     double epsilon = 1e-3);

// Uniform draw on [epsilon, 1).
double sample_timestep(std::uint64_t seed, double epsilon);

// Independent per-position Bernoulli(t) masking.
NoisedView apply_mask(const Tokens& clean, double t, std::uint64_t seed,
                      double epsilon = 1e-3);

// Uniformly random partition of `mask_set` with |part_a| = round_half_even(rho*|M|).
SplitMasks complementary_split(const std::vector<int>& mask_set, double rho,
                               std::uint64_t seed);

// Returns a copy of `view` with `subset` (must be contained in the mask set)
// restored to clean tokens.
NoisedView reveal(const NoisedView& view, const std::vector<int>& subset);

// Two demonstration-conditioned teacher passes: pass 1 reveals part_a and
// supplies part_b, pass 2 the reverse. Merged outputs copy the designated
// pass verbatim. Always two passes, even for a degenerate split.
MergedTeacherOutput two_pass_teacher(const TeacherEval& teacher,
                                     const NoisedView& view,
                                     const SplitMasks& split);

// round-half-to-even, exposed for tests of the split size rule.
long long round_half_even(double x);

} // namespace distill
