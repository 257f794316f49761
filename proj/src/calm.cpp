#include "distill/calm.hpp"

#include <algorithm>
#include <cmath>

#include "distill/errors.hpp"

namespace distill {

namespace {

double clamp_prob(double p) {
    return std::clamp(p, kProbLogClamp, 1.0 - kProbLogClamp);
}

// -[target log p + (1-target) log(1-p)] with p clamped inside the logs.
double bce(double p, double target) {
    const double pc = clamp_prob(p);
    return -(target * std::log(pc) + (1.0 - target) * std::log(1.0 - pc));
}

} // namespace

std::string to_string(CalmVariant variant) {
    switch (variant) {
        case CalmVariant::fwd_calm: return "fwd_calm";
        case CalmVariant::calm_tidal: return "calm_tidal";
        case CalmVariant::rev_calm: return "rev_calm";
    }
    return "unknown";
}

double fwd_calm(double p_s, double p_t) { return bce(p_s, p_t); }

double calm_tidal(double p_s, double p_t, double lam) {
    if (!(lam >= 0.0 && lam <= 1.0))
        throw PreconditionError("lambda outside [0, 1]");
    const double p_mix = (1.0 - lam) * p_s + lam * p_t;
    return bce(p_s, p_mix);
}

double rev_calm(double p_s, double p_t) { return bce(p_t, p_s); }

double fwd_grad(double p_s, double p_t) {
    const double pc = clamp_prob(p_s);
    return -(p_t / pc - (1.0 - p_t) / (1.0 - pc));
}

double calm_tidal_grad(double p_s, double p_t, double lam) {
    if (!(lam >= 0.0 && lam <= 1.0))
        throw PreconditionError("lambda outside [0, 1]");
    const double p_mix = (1.0 - lam) * p_s + lam * p_t;
    return fwd_grad(p_s, p_mix);
}

double rev_grad(double /*p_s*/, double p_t) {
    const double pc = clamp_prob(p_t);
    return -std::log(pc / (1.0 - pc));
}

double bernoulli_kl(double p, double q) {
    const double qc = clamp_prob(q);
    double kl = 0.0;
    if (p > 0.0) kl += p * std::log(p / qc);
    if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - qc));
    return kl;
}

double bernoulli_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
    return h;
}

LossReport loss_shared(double ce, double tidal, double w_tidal) {
    if (w_tidal < 0.0) throw PreconditionError("loss weight must be >= 0");
    LossReport report;
    report.ce = ce;
    report.distill = tidal;
    report.weight = w_tidal;
    report.total = ce + w_tidal * tidal;
    report.variant = "tidal";
    return report;
}

LossReport loss_cross(double ce, double dist, double w_calm, CalmVariant variant) {
    if (w_calm < 0.0) throw PreconditionError("loss weight must be >= 0");
    LossReport report;
    report.ce = ce;
    report.distill = dist;
    report.weight = w_calm;
    report.total = ce + w_calm * dist;
    report.variant = to_string(variant);
    return report;
}

GradDiagnostics grad_diagnostics(double p_s, double p_t) {
    GradDiagnostics d;
    d.p_s = p_s;
    d.p_t = p_t;
    d.fwd_loss = fwd_calm(p_s, p_t);
    d.rev_loss = rev_calm(p_s, p_t);
    d.fwd_grad = fwd_grad(p_s, p_t);
    d.rev_grad = rev_grad(p_s, p_t);
    d.rev_bound = std::abs(std::log((1.0 - kProbLogClamp) / kProbLogClamp));
    // Relative step keeps central differences inside (0, 1) at the extremes.
    const double h = std::max(std::min(p_s, 1.0 - p_s), 1e-8) * 1e-3;
    d.fd_fwd = (fwd_calm(p_s + h, p_t) - fwd_calm(p_s - h, p_t)) / (2.0 * h);
    d.fd_rev = (rev_calm(p_s + h, p_t) - rev_calm(p_s - h, p_t)) / (2.0 * h);
    return d;
}

} // namespace distill
