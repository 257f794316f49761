#include "distill/noising.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "distill/errors.hpp"
#include "distill/rng.hpp"

namespace distill {

long long round_half_even(double x) {
    const double f = std::floor(x);
    const double frac = x - f;
    const long long lo = static_cast<long long>(f);
    if (frac < 0.5) return lo;
    if (frac > 0.5) return lo + 1;
    return (lo % 2 == 0) ? lo : lo + 1;
}

NoisedView make_view(Tokens clean, double timestep, std::vector<int> mask_set,
                     double epsilon) {
    if (clean.empty()) throw PreconditionError("view requires a non-empty sequence");
    if (!(timestep >= epsilon && timestep < 1.0))
        throw PreconditionError("timestep outside [epsilon, 1)");
    std::sort(mask_set.begin(), mask_set.end());
    mask_set.erase(std::unique(mask_set.begin(), mask_set.end()), mask_set.end());
    const int n = static_cast<int>(clean.size());
    for (Token tok : clean)
        if (tok == kMaskToken)
            throw PreconditionError("clean sequence contains the mask id");
    for (int pos : mask_set)
        if (pos < 0 || pos >= n)
            throw PreconditionError("mask position out of range");
    NoisedView view{std::move(clean), timestep, std::move(mask_set), {}};
    view.corrupted = view.clean;
    for (int pos : view.mask_set) view.corrupted[pos] = kMaskToken;
    return view;
}

double sample_timestep(std::uint64_t seed, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ConfigError("epsilon must lie in (0, 1)");
    Rng rng(seed);
    return epsilon + rng.uniform01() * (1.0 - epsilon);
}

NoisedView apply_mask(const Tokens& clean, double t, std::uint64_t seed,
                      double epsilon) {
    if (!(t >= epsilon && t < 1.0))
        throw PreconditionError("timestep outside [epsilon, 1)");
    Rng rng(seed);
    std::vector<int> mask;
    for (int i = 0; i < static_cast<int>(clean.size()); ++i)
        if (rng.bernoulli(t)) mask.push_back(i);
    return make_view(clean, t, std::move(mask), epsilon);
}

SplitMasks complementary_split(const std::vector<int>& mask_set, double rho,
                               std::uint64_t seed) {
    if (!(rho > 0.0 && rho < 1.0))
        throw PreconditionError("rho must lie in (0, 1)");
    std::vector<int> pool = mask_set;
    std::sort(pool.begin(), pool.end());
    Rng rng(seed);
    rng.shuffle(pool);
    const std::size_t k = static_cast<std::size_t>(
        round_half_even(rho * static_cast<double>(pool.size())));
    SplitMasks split;
    split.rho = rho;
    split.part_a.assign(pool.begin(), pool.begin() + k);
    split.part_b.assign(pool.begin() + k, pool.end());
    std::sort(split.part_a.begin(), split.part_a.end());
    std::sort(split.part_b.begin(), split.part_b.end());
    return split;
}

NoisedView reveal(const NoisedView& view, const std::vector<int>& subset) {
    for (int pos : subset)
        if (!std::binary_search(view.mask_set.begin(), view.mask_set.end(), pos))
            throw PreconditionError("reveal subset not contained in the mask set");
    std::vector<int> remaining;
    remaining.reserve(view.mask_set.size());
    std::vector<int> sorted_subset = subset;
    std::sort(sorted_subset.begin(), sorted_subset.end());
    std::set_difference(view.mask_set.begin(), view.mask_set.end(),
                        sorted_subset.begin(), sorted_subset.end(),
                        std::back_inserter(remaining));
    NoisedView out = view;
    out.mask_set = std::move(remaining);
    out.corrupted = view.clean;
    for (int pos : out.mask_set) out.corrupted[pos] = kMaskToken;
    return out;
}

MergedTeacherOutput two_pass_teacher(const TeacherEval& teacher,
                                     const NoisedView& view,
                                     const SplitMasks& split) {
    std::vector<int> combined = split.part_a;
    combined.insert(combined.end(), split.part_b.begin(), split.part_b.end());
    std::sort(combined.begin(), combined.end());
    if (combined != view.mask_set ||
        split.part_a.size() + split.part_b.size() != view.mask_set.size())
        throw PreconditionError("split does not partition the view's mask set");

    const PositionVectors pass1 = teacher(reveal(view, split.part_a));
    const PositionVectors pass2 = teacher(reveal(view, split.part_b));

    MergedTeacherOutput merged;
    merged.pass_count = 2;
    for (int pos : split.part_b) {
        auto it = pass1.find(pos);
        if (it == pass1.end())
            throw PreconditionError("teacher pass 1 missing position " +
                                    std::to_string(pos));
        merged.logits[pos] = it->second;
    }
    for (int pos : split.part_a) {
        auto it = pass2.find(pos);
        if (it == pass2.end())
            throw PreconditionError("teacher pass 2 missing position " +
                                    std::to_string(pos));
        merged.logits[pos] = it->second;
    }
    return merged;
}

} // namespace distill
