#include "distill/tidal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "distill/errors.hpp"

namespace distill {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_schedule(const ScheduleConfig& cfg) {
    if (!(cfg.lambda_init >= 0.0 && cfg.lambda_init <= cfg.lambda_max &&
          cfg.lambda_max <= 1.0))
        throw ConfigError("schedule requires 0 <= lambda_init <= lambda_max <= 1");
    if (!(cfg.sigma > 0.0)) throw ConfigError("schedule sigma must be positive");
    if (!(cfg.const_lambda >= 0.0 && cfg.const_lambda <= 1.0))
        throw ConfigError("const_lambda must lie in [0, 1]");
}

} // namespace

double lambda_train(double p, const ScheduleConfig& cfg) {
    check_schedule(cfg);
    if (!(p >= 0.0 && p <= 1.0))
        throw PreconditionError("training progress outside [0, 1]");
    return cfg.lambda_init +
           (cfg.lambda_max - cfg.lambda_init) * 0.5 * (1.0 - std::cos(kPi * p));
}

double lambda_t(double t, double p, const ScheduleConfig& cfg) {
    if (!(t > 0.0 && t < 1.0))
        throw PreconditionError("timestep outside (0, 1)");
    switch (cfg.mode) {
        case ScheduleMode::dual_axis:
            return lambda_train(p, cfg) * (1.0 - t);
        case ScheduleMode::train_only:
            return lambda_train(p, cfg);
        case ScheduleMode::timestep_only:
            check_schedule(cfg);
            if (!(p >= 0.0 && p <= 1.0))
                throw PreconditionError("training progress outside [0, 1]");
            return cfg.const_lambda * (1.0 - t);
        case ScheduleMode::constant:
            check_schedule(cfg);
            if (!(p >= 0.0 && p <= 1.0))
                throw PreconditionError("training progress outside [0, 1]");
            return cfg.const_lambda;
    }
    throw ConfigError("unknown schedule mode");
}

double midrange_weight(double t, double sigma) {
    if (!(sigma > 0.0)) throw PreconditionError("sigma must be positive");
    const double d = t - 0.5;
    return std::exp(-d * d / (2.0 * sigma * sigma));
}

std::vector<double> softmax(const std::vector<double>& logits,
                            double temperature) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double x : logits) max_logit = std::max(max_logit, x);
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - max_logit) / temperature);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
    return kl;
}

DistillTarget interpolated_target(const PositionVectors& student_logits,
                                  const PositionVectors& teacher_logits,
                                  double lam, double temperature) {
    if (!(temperature > 0.0)) throw PreconditionError("temperature must be positive");
    if (!(lam >= 0.0 && lam <= 1.0))
        throw PreconditionError("lambda outside [0, 1]");
    if (student_logits.size() != teacher_logits.size())
        throw PreconditionError("student/teacher cover different position sets");

    DistillTarget target;
    target.lambda_used = lam;
    target.temperature = temperature;
    for (const auto& [pos, s] : student_logits) {
        auto it = teacher_logits.find(pos);
        if (it == teacher_logits.end())
            throw PreconditionError("teacher logits missing a masked position");
        const std::vector<double>& t = it->second;
        if (t.size() != s.size())
            throw PreconditionError("student/teacher vocabulary size mismatch");
        std::vector<double> mixed(s.size());
        // Endpoints avoid 0 * (-inf) when a teacher log-prob is -inf.
        for (std::size_t v = 0; v < s.size(); ++v) {
            if (lam == 0.0) mixed[v] = s[v];
            else if (lam == 1.0) mixed[v] = t[v];
            else mixed[v] = (1.0 - lam) * s[v] + lam * t[v];
        }
        target.probabilities[pos] = softmax(mixed, temperature);
    }
    return target;
}

double tidal_loss(const PositionVectors& student_logits,
                  const DistillTarget& target, double temperature,
                  double timestep, const ScheduleConfig& cfg) {
    if (temperature != target.temperature)
        throw ConfigError("loss temperature differs from the target's");
    if (student_logits.size() != target.probabilities.size())
        throw PreconditionError("target does not cover the student positions");
    if (student_logits.empty()) return 0.0;

    double total = 0.0;
    for (const auto& [pos, s] : student_logits) {
        const std::vector<double>& r = target.probabilities.at(pos);
        total += kl_divergence(r, softmax(s, temperature));
    }
    double loss = total / static_cast<double>(student_logits.size()) *
                  temperature * temperature;
    if (cfg.midrange_enabled) loss *= midrange_weight(timestep, cfg.sigma);
    return loss;
}

PositionVectors tidal_loss_gradient(const PositionVectors& student_logits,
                                    const DistillTarget& target,
                                    double temperature, double timestep,
                                    const ScheduleConfig& cfg) {
    if (temperature != target.temperature)
        throw ConfigError("loss temperature differs from the target's");
    if (student_logits.size() != target.probabilities.size())
        throw PreconditionError("target does not cover the student positions");

    const double scale =
        (student_logits.empty()
             ? 0.0
             : (cfg.midrange_enabled ? midrange_weight(timestep, cfg.sigma) : 1.0) /
                   static_cast<double>(student_logits.size()));
    PositionVectors grad;
    for (const auto& [pos, s] : student_logits) {
        const std::vector<double>& r = target.probabilities.at(pos);
        const std::vector<double> q = softmax(s, temperature);
        std::vector<double> g(s.size());
        for (std::size_t v = 0; v < s.size(); ++v)
            g[v] = scale * temperature * (q[v] - r[v]);
        grad[pos] = std::move(g);
    }
    return grad;
}

} // namespace distill
