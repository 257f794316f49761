#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "distill/core.hpp"
#include "distill/markov.hpp"
#include "distill/noising.hpp"
#include "distill/student.hpp"
#include "distill/teacher.hpp"
#include "distill/tidal.hpp"
#include "distill/tokenizer.hpp"

namespace distill {

enum class Pipeline { shared_tokenizer, cross_tokenizer };

std::string to_string(Pipeline pipeline);

// Generative process and, for the cross-tokenizer pipeline, the teacher-side
// tokenizer and the corpus used to fit the teacher's chain over its own ids.
struct WorldConfig {
    MarkovSpec spec;            // over student ids (shared) / alphabet indices (cross)
    std::string alphabet;       // cross pipeline only
    MergeTable teacher_merges;  // cross pipeline only
    // Teacher fit corpus: read from `fit_corpus_path` (UTF-8, one document
    // per line) when set, otherwise sampled from `spec`.
    std::string fit_corpus_path;
    int fit_corpus_docs = 200;
    int fit_doc_length = 16;
    std::uint64_t fit_seed = 7;
};

enum class KlDirection { teacher_to_student, student_to_teacher };

struct KlEvalConfig {
    int views = 64;
    std::uint64_t seed = 9001;
    KlDirection direction = KlDirection::teacher_to_student;
};

struct ExperimentConfig {
    Pipeline pipeline = Pipeline::shared_tokenizer;
    ScheduleConfig schedule;
    bool compdemo = false;
    double rho = 0.5;
    DistillObjective objective = DistillObjective::tidal;
    double distill_weight = 1.0;
    double temperature = 2.0;
    int epochs = 4;
    int steps_per_epoch = 500;
    int batch_size = 32;
    int sequence_length = 8;
    std::uint64_t seed = 1;
    double learning_rate = 0.1;
    double epsilon = 1e-3;
    // Scales the distillation term by (1 - lambda_t). Incompatible with
    // rev_calm (the factor suppresses its bounded gradient) unless the
    // override flag is set.
    bool lambda_scale_distill = false;
    bool allow_rev_lambda_scale = false;
    bool ce_inverse_timestep = false;
    double fixed_timestep = 0.0;  // 0 disables the override
    enum class Init { zero, adversarial } init = Init::zero;
    double adversarial_scale = 8.0;
    WorldConfig world;
    KlEvalConfig kl_eval;
};

// Rejects inconsistent pipeline/objective pairings and invalid ranges.
void validate_config(const ExperimentConfig& cfg);

struct StepRecord {
    int step = 0;
    double progress = 0.0;
    double timestep = 0.0;
    double lambda = 0.0;
    double ce = 0.0;
    double distill = 0.0;
    double total = 0.0;
    long teacher_passes = 0;  // cumulative
    double distill_grad_norm = 0.0;
};

struct MetricsLog {
    std::vector<StepRecord> steps;
    // epoch_kl[0] is the initial model; one entry per completed epoch follows.
    // Only populated on the shared pipeline.
    std::vector<double> epoch_kl;
    long total_teacher_passes = 0;
    std::string final_checkpoint;  // FeaturizedDenoiser::to_json of the result
    ExperimentConfig config;

    double final_kl() const { return epoch_kl.empty() ? 0.0 : epoch_kl.back(); }
    std::string to_csv() const;
    std::string summary_json(const std::string& preset = "") const;
};

MetricsLog run_experiment(const ExperimentConfig& cfg);

// Mean KL between teacher posteriors and the student softmax over all masked
// positions of the eval views. Requires a shared vocabulary.
double kl_to_teacher(const FeaturizedDenoiser& model, const ExactTeacher& teacher,
                     const std::vector<NoisedView>& eval_views,
                     KlDirection direction = KlDirection::teacher_to_student);

// Deterministic evaluation views (each with at least one masked position).
std::vector<NoisedView> make_eval_views(const MarkovSpec& spec, int count,
                                        int length, std::uint64_t seed,
                                        double epsilon);

// Named presets: full, wo_tstep, baseline_tstep_only, wo_compdemo, ce_only.
ExperimentConfig ablation_preset(const std::string& name);

} // namespace distill
