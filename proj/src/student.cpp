#include "distill/student.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "distill/errors.hpp"

namespace distill {

FeaturizedDenoiser FeaturizedDenoiser::zero(const FeatureSpec& spec) {
    FeaturizedDenoiser model;
    model.feature_spec = spec;
    model.weights.assign(static_cast<std::size_t>(spec.vocab_size) * spec.dim(), 0.0);
    model.bias.assign(spec.vocab_size, 0.0);
    return model;
}

std::string FeaturizedDenoiser::to_json() const {
    nlohmann::ordered_json j;
    j["feature_spec"] = {{"vocab_size", feature_spec.vocab_size},
                         {"position_buckets", feature_spec.position_buckets}};
    j["weights"] = weights;
    j["bias"] = bias;
    return j.dump(2) + "\n";
}

FeaturizedDenoiser FeaturizedDenoiser::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        FeaturizedDenoiser model;
        model.feature_spec.vocab_size = j.at("feature_spec").at("vocab_size");
        model.feature_spec.position_buckets =
            j.at("feature_spec").at("position_buckets");
        model.weights = j.at("weights").get<std::vector<double>>();
        model.bias = j.at("bias").get<std::vector<double>>();
        const std::size_t expected =
            static_cast<std::size_t>(model.feature_spec.vocab_size) *
            model.feature_spec.dim();
        if (model.weights.size() != expected ||
            model.bias.size() !=
                static_cast<std::size_t>(model.feature_spec.vocab_size))
            throw ConfigError("checkpoint shapes do not match the feature spec");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

ParamGrad ParamGrad::zero(const FeatureSpec& spec) {
    ParamGrad grad;
    grad.weights.assign(static_cast<std::size_t>(spec.vocab_size) * spec.dim(), 0.0);
    grad.bias.assign(spec.vocab_size, 0.0);
    return grad;
}

void ParamGrad::add_scaled(const ParamGrad& other, double scale) {
    for (std::size_t i = 0; i < weights.size(); ++i)
        weights[i] += scale * other.weights[i];
    for (std::size_t i = 0; i < bias.size(); ++i)
        bias[i] += scale * other.bias[i];
}

void ParamGrad::scale(double factor) {
    for (double& w : weights) w *= factor;
    for (double& b : bias) b *= factor;
}

double ParamGrad::norm() const {
    double sq = 0.0;
    for (double w : weights) sq += w * w;
    for (double b : bias) sq += b * b;
    return std::sqrt(sq);
}

bool ParamGrad::finite() const {
    for (double w : weights)
        if (!std::isfinite(w)) return false;
    for (double b : bias)
        if (!std::isfinite(b)) return false;
    return true;
}

std::string to_string(DistillObjective objective) {
    switch (objective) {
        case DistillObjective::tidal: return "tidal";
        case DistillObjective::fwd_calm: return "fwd_calm";
        case DistillObjective::calm_tidal: return "calm_tidal";
        case DistillObjective::rev_calm: return "rev_calm";
    }
    return "unknown";
}

std::vector<double> featurize(const NoisedView& view, int position,
                              const FeatureSpec& spec) {
    if (!std::binary_search(view.mask_set.begin(), view.mask_set.end(), position))
        throw PreconditionError("featurize requires a masked position");
    const int n = static_cast<int>(view.corrupted.size());
    const int v = spec.vocab_size;
    std::vector<double> f(spec.dim(), 0.0);

    int left = -1;
    for (int j = position - 1; j >= 0; --j)
        if (view.corrupted[j] != kMaskToken) {
            left = view.corrupted[j];
            break;
        }
    int right = -1;
    for (int j = position + 1; j < n; ++j)
        if (view.corrupted[j] != kMaskToken) {
            right = view.corrupted[j];
            break;
        }
    f[left >= 0 ? left : v] = 1.0;                      // left one-hot + none
    f[(v + 1) + (right >= 0 ? right : v)] = 1.0;        // right one-hot + none

    int visible = 0;
    const int hist_base = 2 * (v + 1);
    for (int j = 0; j < n; ++j)
        if (view.corrupted[j] != kMaskToken) {
            f[hist_base + view.corrupted[j]] += 1.0;
            ++visible;
        }
    if (visible > 0)
        for (int k = 0; k < v; ++k) f[hist_base + k] /= visible;

    const int bucket = std::min(spec.position_buckets - 1,
                                position * spec.position_buckets / n);
    f[hist_base + v + bucket] = 1.0;
    return f;
}

PositionVectors forward(const FeaturizedDenoiser& model, const NoisedView& view) {
    const int v = model.feature_spec.vocab_size;
    for (Token tok : view.clean)
        if (tok < 0 || tok >= v)
            throw ConfigError("view vocabulary exceeds the model's");
    const int dim = model.feature_spec.dim();
    PositionVectors logits;
    for (int pos : view.mask_set) {
        const std::vector<double> f = featurize(view, pos, model.feature_spec);
        std::vector<double> out(v, 0.0);
        for (int row = 0; row < v; ++row) {
            double acc = model.bias[row];
            const double* w = &model.weights[static_cast<std::size_t>(row) * dim];
            for (int k = 0; k < dim; ++k) acc += w[k] * f[k];
            out[row] = acc;
        }
        logits[pos] = std::move(out);
    }
    return logits;
}

namespace {

// Adds g (a per-logit gradient at `pos`) through the linear layer.
void chain_to_params(const NoisedView& view, int pos, const std::vector<double>& g,
                     const FeatureSpec& spec, ParamGrad& grad) {
    const std::vector<double> f = featurize(view, pos, spec);
    const int dim = spec.dim();
    for (int row = 0; row < spec.vocab_size; ++row) {
        grad.bias[row] += g[row];
        double* w = &grad.weights[static_cast<std::size_t>(row) * dim];
        for (int k = 0; k < dim; ++k) w[k] += g[row] * f[k];
    }
}

} // namespace

CeResult ce_loss_and_grad(const FeaturizedDenoiser& model, const NoisedView& view) {
    CeResult result;
    result.grad = ParamGrad::zero(model.feature_spec);
    if (view.mask_set.empty()) {
        result.skipped = true;
        return result;
    }
    const PositionVectors logits = forward(model, view);
    const double inv_count = 1.0 / static_cast<double>(view.mask_set.size());
    for (const auto& [pos, l] : logits) {
        const std::vector<double> probs = softmax(l);
        const Token truth = view.clean[pos];
        result.loss -= inv_count *
                       std::log(std::max(probs[truth], kProbLogClamp));
        std::vector<double> g(probs);
        g[truth] -= 1.0;
        for (double& x : g) x *= inv_count;
        chain_to_params(view, pos, g, model.feature_spec, result.grad);
    }
    return result;
}

ChunkProbs student_chunk_probs(const FeaturizedDenoiser& model,
                               const NoisedView& view, const ChunkTable& table,
                               double temperature) {
    const PositionVectors logits = forward(model, view);
    std::vector<double> lp(view.clean.size(), 0.0);
    for (const auto& [pos, l] : logits) {
        const std::vector<double> probs = softmax(l);
        lp[pos] = std::log(probs[view.clean[pos]]);
    }
    std::vector<double> chunk_lp(table.size(), 0.0);
    for (std::size_t c = 0; c < table.size(); ++c)
        for (int tok : table.student_members[c]) chunk_lp[c] += lp[tok];
    return chunk_probs(chunk_lp, temperature);
}

namespace {

DistillResult tidal_param_grad(const FeaturizedDenoiser& model,
                               const NoisedView& view, const DistillContext& ctx) {
    DistillResult result;
    result.grad = ParamGrad::zero(model.feature_spec);
    if (view.mask_set.empty()) {
        result.skipped = true;
        return result;
    }
    const ScheduleConfig cfg = ctx.schedule ? *ctx.schedule : ScheduleConfig{};
    const PositionVectors logits = forward(model, view);
    const DistillTarget target =
        interpolated_target(logits, *ctx.teacher_logits, ctx.lambda,
                            ctx.temperature);
    result.loss = tidal_loss(logits, target, ctx.temperature, ctx.timestep, cfg);
    const PositionVectors logit_grad =
        tidal_loss_gradient(logits, target, ctx.temperature, ctx.timestep, cfg);
    for (const auto& [pos, g] : logit_grad)
        chain_to_params(view, pos, g, model.feature_spec, result.grad);
    return result;
}

DistillResult calm_param_grad(const FeaturizedDenoiser& model,
                              const NoisedView& view, DistillObjective objective,
                              const DistillContext& ctx) {
    DistillResult result;
    result.grad = ParamGrad::zero(model.feature_spec);
    if (ctx.active->empty() || view.mask_set.empty()) {
        result.skipped = true;
        return result;
    }
    const ChunkTable& table = *ctx.table;
    const std::vector<double>& p_t = *ctx.teacher_chunk_probs;

    const PositionVectors logits = forward(model, view);
    std::vector<std::vector<double>> softmaxes_by_pos(view.clean.size());
    std::vector<double> lp(view.clean.size(), 0.0);
    for (const auto& [pos, l] : logits) {
        softmaxes_by_pos[pos] = softmax(l);
        lp[pos] = std::log(softmaxes_by_pos[pos][view.clean[pos]]);
    }
    std::vector<double> chunk_lp(table.size(), 0.0);
    for (std::size_t c = 0; c < table.size(); ++c)
        for (int tok : table.student_members[c]) chunk_lp[c] += lp[tok];

    const double inv_active = 1.0 / static_cast<double>(ctx.active->size());
    for (int c : *ctx.active) {
        const double p_s = std::exp(chunk_lp[c] / ctx.temperature);
        double loss = 0.0;
        double coef = 0.0;
        switch (objective) {
            case DistillObjective::fwd_calm:
                loss = fwd_calm(p_s, p_t[c]);
                coef = fwd_grad(p_s, p_t[c]);
                break;
            case DistillObjective::calm_tidal:
                loss = calm_tidal(p_s, p_t[c], ctx.lambda);
                coef = calm_tidal_grad(p_s, p_t[c], ctx.lambda);
                break;
            case DistillObjective::rev_calm:
                loss = rev_calm(p_s, p_t[c]);
                coef = rev_grad(p_s, p_t[c]);
                break;
            case DistillObjective::tidal:
                throw ConfigError("tidal is not a chunk objective");
        }
        result.loss += inv_active * loss;
        // dL/d(chunk log-prob) = coef * p_s / T, spread over masked members.
        const double g_lp = inv_active * coef * p_s / ctx.temperature;
        for (int tok : table.student_members[c]) {
            if (view.corrupted[tok] != kMaskToken) continue;
            std::vector<double> g(softmaxes_by_pos[tok]);
            g[view.clean[tok]] -= 1.0;
            for (double& x : g) x *= -g_lp;  // d(lp)/d(logit) = onehot - softmax
            chain_to_params(view, tok, g, model.feature_spec, result.grad);
        }
    }
    return result;
}

} // namespace

DistillResult distill_grad(const FeaturizedDenoiser& model, const NoisedView& view,
                           DistillObjective objective, const DistillContext& ctx) {
    if (objective == DistillObjective::tidal) {
        if (ctx.teacher_logits == nullptr)
            throw ConfigError("tidal distillation requires teacher logits");
        return tidal_param_grad(model, view, ctx);
    }
    if (ctx.table == nullptr || ctx.teacher_chunk_probs == nullptr ||
        ctx.active == nullptr)
        throw ConfigError("chunk distillation requires alignment context");
    if (ctx.teacher_chunk_probs->size() != ctx.table->size())
        throw ConfigError("teacher chunk probabilities do not match the table");
    return calm_param_grad(model, view, objective, ctx);
}

void sgd_step(FeaturizedDenoiser& model, const ParamGrad& grad,
              OptimizerState& state) {
    if (!(state.learning_rate > 0.0))
        throw ConfigError("learning rate must be positive");
    if (!grad.finite())
        throw NumericalAbort("non-finite gradient at optimizer step " +
                             std::to_string(state.step_count));
    for (std::size_t i = 0; i < model.weights.size(); ++i)
        model.weights[i] -= state.learning_rate * grad.weights[i];
    for (std::size_t i = 0; i < model.bias.size(); ++i)
        model.bias[i] -= state.learning_rate * grad.bias[i];
    ++state.step_count;
}

} // namespace distill
