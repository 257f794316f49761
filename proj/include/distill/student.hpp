#pragma once

#include <cstdint>
#include <vector>

#include "distill/calm.hpp"
#include "distill/chunkalign.hpp"
#include "distill/core.hpp"
#include "distill/noising.hpp"
#include "distill/tidal.hpp"

namespace distill {

// Hand-crafted context features for one masked position: one-hot of the
// nearest visible left neighbor (plus a "none" slot), the same for the right
// neighbor, the normalized visible-token histogram, and a position bucket.
struct FeatureSpec {
    int vocab_size = 0;
    int position_buckets = 4;

    int dim() const { return 2 * (vocab_size + 1) + vocab_size + position_buckets; }
};

// Linear softmax denoiser: logits = weights * features + bias per masked
// position. All gradients are analytic.
struct FeaturizedDenoiser {
    FeatureSpec feature_spec;
    std::vector<double> weights;  // vocab_size x dim(), row-major
    std::vector<double> bias;     // vocab_size

    static FeaturizedDenoiser zero(const FeatureSpec& spec);

    // Checkpoint round trip (weights, bias, feature_spec).
    std::string to_json() const;
    static FeaturizedDenoiser from_json(const std::string& text);
};

struct OptimizerState {
    double learning_rate = 0.1;
    long step_count = 0;
};

// Parameter-space gradient, same shapes as the model.
struct ParamGrad {
    std::vector<double> weights;
    std::vector<double> bias;

    static ParamGrad zero(const FeatureSpec& spec);
    void add_scaled(const ParamGrad& other, double scale);
    void scale(double factor);
    double norm() const;
    bool finite() const;
};

std::vector<double> featurize(const NoisedView& view, int position,
                              const FeatureSpec& spec);

// Logits at every masked position of the view.
PositionVectors forward(const FeaturizedDenoiser& model, const NoisedView& view);

struct CeResult {
    double loss = 0.0;
    ParamGrad grad;
    bool skipped = false;  // empty mask
};

// Mean over masked positions of -log softmax(logits)[clean token].
CeResult ce_loss_and_grad(const FeaturizedDenoiser& model, const NoisedView& view);

enum class DistillObjective { tidal, fwd_calm, calm_tidal, rev_calm };

std::string to_string(DistillObjective objective);

// Everything a distillation gradient needs beyond the model and the view.
// tidal uses teacher_logits; the CALM variants use the alignment fields.
struct DistillContext {
    // tidal
    const PositionVectors* teacher_logits = nullptr;
    // CALM variants
    const ChunkTable* table = nullptr;
    const std::vector<double>* teacher_chunk_probs = nullptr;  // p_t per chunk
    const std::vector<int>* active = nullptr;                  // active chunk ids
    // shared
    double lambda = 0.0;
    double temperature = 1.0;
    double timestep = 0.5;
    const ScheduleConfig* schedule = nullptr;  // tidal midrange factors
};

struct DistillResult {
    double loss = 0.0;
    ParamGrad grad;
    bool skipped = false;  // empty mask / no active chunks
};

DistillResult distill_grad(const FeaturizedDenoiser& model, const NoisedView& view,
                           DistillObjective objective, const DistillContext& ctx);

// Student-side chunk probabilities for the current view: per-token log-prob
// of the clean token at masked positions (0 elsewhere), summed per chunk and
// temperature-scaled. Exposed for the trainer and for end-to-end tests.
ChunkProbs student_chunk_probs(const FeaturizedDenoiser& model,
                               const NoisedView& view, const ChunkTable& table,
                               double temperature);

// weights <- weights - lr * grad. Throws NumericalAbort on non-finite input.
void sgd_step(FeaturizedDenoiser& model, const ParamGrad& grad,
              OptimizerState& state);

} // namespace distill
