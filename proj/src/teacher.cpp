#include "distill/teacher.hpp"

#include <cmath>
#include <string>

#include "distill/errors.hpp"

namespace distill {

ExactTeacher::ExactTeacher(MarkovSpec spec, int max_enum_length,
                           bool allow_forward_backward)
    : spec_(std::move(spec)),
      max_enum_length_(max_enum_length),
      allow_forward_backward_(allow_forward_backward) {
    if (max_enum_length_ < 1)
        throw ConfigError("max_enum_length must be >= 1");
}

PositionVectors ExactTeacher::exact_posterior(const NoisedView& view) const {
    if (static_cast<int>(view.clean.size()) <= max_enum_length_)
        return enumerate_posterior(view);
    if (allow_forward_backward_) return forward_backward_posterior(view);
    throw CapacityError("sequence length " + std::to_string(view.clean.size()) +
                        " exceeds enumeration bound " +
                        std::to_string(max_enum_length_) +
                        " and forward-backward is disabled");
}

PositionVectors ExactTeacher::enumerate_posterior(const NoisedView& view) const {
    const int n = static_cast<int>(view.clean.size());
    if (n > max_enum_length_)
        throw CapacityError("sequence length exceeds enumeration bound");
    const int vocab = spec_.vocab_size();
    for (Token tok : view.corrupted)
        if (tok != kMaskToken && (tok < 0 || tok >= vocab))
            throw PreconditionError("view token outside the teacher alphabet");

    PositionVectors result;
    if (view.mask_set.empty()) return result;

    const int m = static_cast<int>(view.mask_set.size());
    for (int pos : view.mask_set)
        result[pos] = std::vector<double>(vocab, 0.0);

    // Walk all V^m assignments of the masked positions.
    Tokens assignment = view.corrupted;
    std::vector<int> digits(m, 0);
    for (int pos : view.mask_set) assignment[pos] = 0;
    while (true) {
        double weight = spec_.initial[assignment[0]];
        for (int i = 0; i + 1 < n && weight > 0.0; ++i)
            weight *= spec_.transition[assignment[i]][assignment[i + 1]];
        if (weight > 0.0)
            for (int k = 0; k < m; ++k)
                result[view.mask_set[k]][digits[k]] += weight;

        int carry = m - 1;
        while (carry >= 0) {
            if (++digits[carry] < vocab) {
                assignment[view.mask_set[carry]] = digits[carry];
                break;
            }
            digits[carry] = 0;
            assignment[view.mask_set[carry]] = 0;
            --carry;
        }
        if (carry < 0) break;
    }

    for (auto& [pos, probs] : result) {
        double total = 0.0;
        for (double p : probs) total += p;
        if (total <= 0.0)
            throw PreconditionError("view has probability zero under the chain");
        for (double& p : probs) p /= total;
    }
    return result;
}

PositionVectors ExactTeacher::forward_backward_posterior(
    const NoisedView& view) const {
    const int n = static_cast<int>(view.clean.size());
    const int vocab = spec_.vocab_size();
    for (Token tok : view.corrupted)
        if (tok != kMaskToken && (tok < 0 || tok >= vocab))
            throw PreconditionError("view token outside the teacher alphabet");

    PositionVectors result;
    if (view.mask_set.empty()) return result;

    auto allowed = [&](int pos, int v) {
        return view.corrupted[pos] == kMaskToken || view.corrupted[pos] == v;
    };

    // Scaled forward pass: alpha[i][v] proportional to P(x_i = v, obs_{<=i}).
    std::vector<std::vector<double>> alpha(n, std::vector<double>(vocab, 0.0));
    for (int v = 0; v < vocab; ++v)
        if (allowed(0, v)) alpha[0][v] = spec_.initial[v];
    auto rescale = [](std::vector<double>& row) {
        double total = 0.0;
        for (double x : row) total += x;
        if (total <= 0.0)
            throw PreconditionError("view has probability zero under the chain");
        for (double& x : row) x /= total;
    };
    rescale(alpha[0]);
    for (int i = 1; i < n; ++i) {
        for (int w = 0; w < vocab; ++w) {
            if (!allowed(i, w)) continue;
            double acc = 0.0;
            for (int v = 0; v < vocab; ++v)
                acc += alpha[i - 1][v] * spec_.transition[v][w];
            alpha[i][w] = acc;
        }
        rescale(alpha[i]);
    }

    // Scaled backward pass: beta[i][v] proportional to P(obs_{>i} | x_i = v).
    std::vector<std::vector<double>> beta(n, std::vector<double>(vocab, 1.0));
    for (int i = n - 2; i >= 0; --i) {
        double total = 0.0;
        for (int v = 0; v < vocab; ++v) {
            double acc = 0.0;
            for (int w = 0; w < vocab; ++w)
                if (allowed(i + 1, w))
                    acc += spec_.transition[v][w] * beta[i + 1][w];
            beta[i][v] = acc;
            total += acc;
        }
        if (total <= 0.0)
            throw PreconditionError("view has probability zero under the chain");
        for (int v = 0; v < vocab; ++v) beta[i][v] /= total;
    }

    for (int pos : view.mask_set) {
        std::vector<double> probs(vocab, 0.0);
        double total = 0.0;
        for (int v = 0; v < vocab; ++v) {
            probs[v] = alpha[pos][v] * beta[pos][v];
            total += probs[v];
        }
        for (double& p : probs) p /= total;
        result[pos] = std::move(probs);
    }
    return result;
}

PositionVectors ExactTeacher::log_posterior(const NoisedView& view) const {
    PositionVectors probs = forward_backward_posterior(view);
    for (auto& [pos, vec] : probs)
        for (double& p : vec) p = std::log(p);
    return probs;
}

double entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

} // namespace distill
