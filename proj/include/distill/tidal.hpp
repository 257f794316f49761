#pragma once

#include <vector>

#include "distill/core.hpp"

namespace distill {

enum class ScheduleMode { dual_axis, train_only, timestep_only, constant };

struct ScheduleConfig {
    double lambda_init = 0.1;
    double lambda_max = 0.9;
    ScheduleMode mode = ScheduleMode::dual_axis;
    double const_lambda = 0.5;  // timestep_only and constant modes
    double sigma = 0.15;
    bool midrange_enabled = false;
};

// Interpolated per-position target distributions. Treated as a constant
// under differentiation everywhere downstream.
struct DistillTarget {
    PositionVectors probabilities;
    double lambda_used = 0.0;
    double temperature = 1.0;
};

// Cosine ramp from lambda_init to lambda_max over training progress p.
double lambda_train(double p, const ScheduleConfig& cfg);

// Interpolation coefficient at timestep t and progress p, per mode:
//   dual_axis      lambda_train(p) * (1 - t)
//   train_only     lambda_train(p)
//   timestep_only  const_lambda * (1 - t)
//   constant       const_lambda
double lambda_t(double t, double p, const ScheduleConfig& cfg);

// exp(-(t - 0.5)^2 / (2 sigma^2)), the optional midrange timestep weight.
double midrange_weight(double t, double sigma);

// softmax(((1 - lam) * student + lam * teacher) / temperature) per position.
DistillTarget interpolated_target(const PositionVectors& student_logits,
                                  const PositionVectors& teacher_logits,
                                  double lam, double temperature);

// Mean over masked positions of KL(target || softmax(s/T)) * T^2, times the
// midrange weight when enabled.
double tidal_loss(const PositionVectors& student_logits,
                  const DistillTarget& target, double temperature,
                  double timestep, const ScheduleConfig& cfg);

// d(tidal_loss)/d(student logits): per position T * (softmax(s/T) - r),
// scaled by the same position-mean and midrange factors as the loss.
PositionVectors tidal_loss_gradient(const PositionVectors& student_logits,
                                    const DistillTarget& target,
                                    double temperature, double timestep,
                                    const ScheduleConfig& cfg);

// Numerically stable helpers shared by the loss implementations.
std::vector<double> softmax(const std::vector<double>& logits,
                            double temperature = 1.0);
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

} // namespace distill
