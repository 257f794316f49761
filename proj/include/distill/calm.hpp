#pragma once

#include <string>

namespace distill {

// Clamp applied to probabilities where they enter a logarithm. Also bounds
// the reverse gradient coefficient: |rev_grad| <= log((1-eps)/eps).
inline constexpr double kProbLogClamp = 1e-9;

enum class CalmVariant { fwd_calm, calm_tidal, rev_calm };

std::string to_string(CalmVariant variant);

// Forward (mode-covering) binary cross-entropy on chunk probabilities:
// -[p_t log p_s + (1-p_t) log(1-p_s)].
double fwd_calm(double p_s, double p_t);

// Forward BCE against the interpolated target p_mix = (1-lam) p_s + lam p_t.
// p_mix is a constant under differentiation.
double calm_tidal(double p_s, double p_t, double lam);

// Reverse-direction BCE: -[p_s log p_t + (1-p_s) log(1-p_t)]; linear in p_s.
double rev_calm(double p_s, double p_t);

// d(fwd_calm)/d(p_s) = -[p_t/p_s - (1-p_t)/(1-p_s)].
double fwd_grad(double p_s, double p_t);

// d(calm_tidal)/d(p_s) with p_mix held constant.
double calm_tidal_grad(double p_s, double p_t, double lam);

// d(rev_calm)/d(p_s) = -log(p_t/(1-p_t)); independent of p_s.
double rev_grad(double p_s, double p_t);

// KL between Bernoulli(p) and Bernoulli(q), with 0 log 0 = 0.
double bernoulli_kl(double p, double q);

// Bernoulli entropy -[p log p + (1-p) log(1-p)] in nats.
double bernoulli_entropy(double p);

// Totals for the combined objectives. total = ce + weight * distill.
struct LossReport {
    double ce = 0.0;
    double distill = 0.0;
    double total = 0.0;
    double lambda_used = 0.0;
    double weight = 0.0;
    int active_chunk_count = 0;
    std::string variant;
};

LossReport loss_shared(double ce, double tidal, double w_tidal);
LossReport loss_cross(double ce, double dist, double w_calm, CalmVariant variant);

// One row of the gradient diagnostic sweep: analytic forward/reverse
// gradients, their central finite differences (relative step), and the
// reverse-coefficient bound.
struct GradDiagnostics {
    double p_s = 0.0;
    double p_t = 0.0;
    double fwd_loss = 0.0;
    double rev_loss = 0.0;
    double fwd_grad = 0.0;
    double rev_grad = 0.0;
    double fd_fwd = 0.0;
    double fd_rev = 0.0;
    double rev_bound = 0.0;
};

GradDiagnostics grad_diagnostics(double p_s, double p_t);

} // namespace distill
