#include "distill/markov.hpp"

#include <cmath>
#include <string>

#include "distill/errors.hpp"
#include "distill/rng.hpp"

namespace distill {

namespace {

constexpr double kRowSumTol = 1e-12;

void check_distribution(const std::vector<double>& p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw PreconditionError(what + " has a negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
        throw PreconditionError(what + " does not sum to 1");
}

} // namespace

MarkovSpec::MarkovSpec(std::vector<double> init,
                       std::vector<std::vector<double>> trans)
    : initial(std::move(init)), transition(std::move(trans)) {
    const std::size_t v = initial.size();
    if (v < 2) throw PreconditionError("MarkovSpec requires vocab size >= 2");
    if (transition.size() != v)
        throw PreconditionError("transition row count does not match vocab size");
    check_distribution(initial, "initial distribution");
    for (std::size_t i = 0; i < v; ++i) {
        if (transition[i].size() != v)
            throw PreconditionError("transition matrix is not square");
        check_distribution(transition[i], "transition row " + std::to_string(i));
    }
}

MarkovSpec MarkovSpec::sticky(int vocab_size, double self_prob) {
    if (vocab_size < 2) throw PreconditionError("sticky spec needs vocab size >= 2");
    if (self_prob <= 0.0 || self_prob >= 1.0)
        throw PreconditionError("self_prob must lie in (0, 1)");
    const double off = (1.0 - self_prob) / (vocab_size - 1);
    std::vector<double> init(vocab_size, 1.0 / vocab_size);
    std::vector<std::vector<double>> trans(vocab_size,
                                           std::vector<double>(vocab_size, off));
    for (int v = 0; v < vocab_size; ++v) trans[v][v] = self_prob;
    return MarkovSpec(std::move(init), std::move(trans));
}

MarkovSpec MarkovSpec::uniform(int vocab_size) {
    if (vocab_size < 2) throw PreconditionError("uniform spec needs vocab size >= 2");
    std::vector<double> init(vocab_size, 1.0 / vocab_size);
    std::vector<std::vector<double>> trans(
        vocab_size, std::vector<double>(vocab_size, 1.0 / vocab_size));
    return MarkovSpec(std::move(init), std::move(trans));
}

MarkovSpec MarkovSpec::lazy(std::vector<double> pi, double laziness) {
    if (laziness < 0.0 || laziness >= 1.0)
        throw PreconditionError("laziness must lie in [0, 1)");
    const int vocab = static_cast<int>(pi.size());
    std::vector<std::vector<double>> trans(vocab, std::vector<double>(vocab));
    for (int v = 0; v < vocab; ++v)
        for (int w = 0; w < vocab; ++w)
            trans[v][w] = (1.0 - laziness) * pi[w] + (v == w ? laziness : 0.0);
    return MarkovSpec(std::move(pi), std::move(trans));
}

MarkovSpec MarkovSpec::block_sticky(int vocab_size, int blocks, double stay_prob) {
    if (blocks < 2 || vocab_size % blocks != 0)
        throw PreconditionError("vocab size must be a multiple of the block count");
    if (stay_prob <= 0.0 || stay_prob >= 1.0)
        throw PreconditionError("stay_prob must lie in (0, 1)");
    const int width = vocab_size / blocks;
    const double in_block = stay_prob / width;
    const double out_block = (1.0 - stay_prob) / (vocab_size - width);
    std::vector<double> init(vocab_size, 1.0 / vocab_size);
    std::vector<std::vector<double>> trans(vocab_size,
                                           std::vector<double>(vocab_size));
    for (int v = 0; v < vocab_size; ++v)
        for (int w = 0; w < vocab_size; ++w)
            trans[v][w] = (v / width == w / width) ? in_block : out_block;
    return MarkovSpec(std::move(init), std::move(trans));
}

Tokens sample_sequence(const MarkovSpec& spec, int length, std::uint64_t seed) {
    if (length < 1) throw PreconditionError("sequence length must be >= 1");
    Rng rng(seed);
    Tokens out;
    out.reserve(static_cast<std::size_t>(length));
    Token cur = static_cast<Token>(rng.categorical(spec.initial));
    out.push_back(cur);
    for (int i = 1; i < length; ++i) {
        cur = static_cast<Token>(rng.categorical(spec.transition[cur]));
        out.push_back(cur);
    }
    return out;
}

MarkovSpec fit_markov(const std::vector<Tokens>& corpus, int vocab_size,
                      double alpha) {
    if (corpus.empty()) throw ConfigError("fit_markov: empty corpus");
    if (vocab_size < 2) throw ConfigError("fit_markov: vocab size must be >= 2");
    const std::size_t v = static_cast<std::size_t>(vocab_size);
    std::vector<double> init_counts(v, 0.0);
    std::vector<std::vector<double>> trans_counts(v, std::vector<double>(v, 0.0));
    for (const Tokens& doc : corpus) {
        if (doc.empty()) continue;
        for (Token tok : doc)
            if (tok < 0 || tok >= vocab_size)
                throw ConfigError("fit_markov: token id out of range");
        init_counts[doc[0]] += 1.0;
        for (std::size_t i = 0; i + 1 < doc.size(); ++i)
            trans_counts[doc[i]][doc[i + 1]] += 1.0;
    }
    auto normalize = [&](std::vector<double>& row) {
        double total = 0.0;
        for (double& c : row) {
            c += alpha;
            total += c;
        }
        for (double& c : row) c /= total;
    };
    normalize(init_counts);
    for (auto& row : trans_counts) normalize(row);
    return MarkovSpec(std::move(init_counts), std::move(trans_counts));
}

} // namespace distill
