#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace distill {

// Token ids are small nonnegative integers; -1 is the reserved mask id.
using Token = std::int32_t;
using Tokens = std::vector<Token>;

inline constexpr Token kMaskToken = -1;

// Per-position vectors (probabilities or logits) keyed by sequence position.
// Keys are exactly the masked positions of the view that produced the map.
using PositionVectors = std::map<int, std::vector<double>>;

} // namespace distill
