#pragma once

#include "distill/core.hpp"
#include "distill/markov.hpp"
#include "distill/noising.hpp"

namespace distill {

// Exact conditional-token oracle for a known Markov chain. Given a noised
// view it returns, for each masked position i, the vector
// P(x_i = v | visible tokens). Enumeration marginalizes over all joint
// assignments of the masked positions; the forward-backward path computes
// the same marginals in O(L * V^2) and is used for longer sequences.
class ExactTeacher {
public:
    explicit ExactTeacher(MarkovSpec spec, int max_enum_length = 12,
                          bool allow_forward_backward = true);

    const MarkovSpec& spec() const { return spec_; }
    int max_enum_length() const { return max_enum_length_; }

    // Dispatching entry point: enumeration within the length bound,
    // forward-backward beyond it when enabled, CapacityError otherwise.
    PositionVectors exact_posterior(const NoisedView& view) const;

    // Strict enumeration; throws CapacityError above the length bound.
    PositionVectors enumerate_posterior(const NoisedView& view) const;

    // Scaled forward-backward recursion over the chain.
    PositionVectors forward_backward_posterior(const NoisedView& view) const;

    // Adapter for two_pass_teacher and the distillation losses: log of the
    // forward-backward posterior, usable directly as teacher logits.
    PositionVectors log_posterior(const NoisedView& view) const;

private:
    MarkovSpec spec_;
    int max_enum_length_;
    bool allow_forward_backward_;
};

// Shannon entropy (nats) of a probability vector.
double entropy(const std::vector<double>& probs);

} // namespace distill
