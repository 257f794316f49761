#pragma once

#include <cstdint>
#include <vector>

#include "distill/core.hpp"

namespace distill {

// First-order Markov chain over a token alphabet. Rows of `transition` and
// `initial` must be probability distributions; validated at construction.
struct MarkovSpec {
    std::vector<double> initial;                  // length V
    std::vector<std::vector<double>> transition;  // V x V, row-stochastic

    MarkovSpec() = default;
    MarkovSpec(std::vector<double> init, std::vector<std::vector<double>> trans);

    int vocab_size() const { return static_cast<int>(initial.size()); }

    // Uniform initial, self-transition `self_prob`, remainder spread evenly.
    static MarkovSpec sticky(int vocab_size, double self_prob);
    static MarkovSpec uniform(int vocab_size);
    // Tokens split into `blocks` equal groups; mass `stay_prob` spread evenly
    // over the current token's group, the rest evenly over the other groups.
    // Within-group splits stay exactly uniform under any conditioning, which
    // makes the group structure pure dark knowledge: soft targets carry it,
    // sampled labels only add noise on that axis.
    static MarkovSpec block_sticky(int vocab_size, int blocks, double stay_prob);
    // Lazy chain with stationary distribution `pi`: repeats the current token
    // with probability `laziness`, otherwise resamples from pi. Initial = pi.
    static MarkovSpec lazy(std::vector<double> pi, double laziness);
};

// Draws a length-`length` sequence: token 0 from `initial`, token i+1 from
// the transition row of token i, each via the documented categorical draw.
Tokens sample_sequence(const MarkovSpec& spec, int length, std::uint64_t seed);

// Maximum-likelihood fit with add-alpha smoothing on both the initial
// distribution and every transition row.
MarkovSpec fit_markov(const std::vector<Tokens>& corpus, int vocab_size,
                      double alpha = 0.1);

} // namespace distill
