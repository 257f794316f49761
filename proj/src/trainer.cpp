#include "distill/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "distill/calm.hpp"
#include "distill/chunkalign.hpp"
#include "distill/errors.hpp"
#include "distill/rng.hpp"

namespace distill {

namespace {

// Sub-stream purposes for derive_seed.
enum : std::uint64_t { kTimestepStream = 1, kDataStream = 2, kMaskStream = 3,
                       kSplitStream = 4 };

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v + 0.0);  // folds -0 into 0
    return buf;
}

bool is_chunk_objective(DistillObjective objective) {
    return objective != DistillObjective::tidal;
}

} // namespace

std::string to_string(Pipeline pipeline) {
    return pipeline == Pipeline::shared_tokenizer ? "shared_tokenizer"
                                                  : "cross_tokenizer";
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.pipeline == Pipeline::shared_tokenizer &&
        is_chunk_objective(cfg.objective))
        throw ConfigError("chunk objectives require the cross_tokenizer pipeline");
    if (cfg.pipeline == Pipeline::cross_tokenizer &&
        !is_chunk_objective(cfg.objective))
        throw ConfigError("tidal requires the shared_tokenizer pipeline");
    if (cfg.objective == DistillObjective::rev_calm && cfg.lambda_scale_distill &&
        !cfg.allow_rev_lambda_scale)
        throw ConfigError(
            "lambda-scaled distillation suppresses the reverse objective's "
            "bounded gradient; set allow_rev_lambda_scale to override");
    if (!(cfg.rho > 0.0 && cfg.rho < 1.0))
        throw ConfigError("rho must lie in (0, 1)");
    if (!(cfg.temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (cfg.distill_weight < 0.0)
        throw ConfigError("distill_weight must be >= 0");
    if (cfg.epochs < 0 || cfg.steps_per_epoch < 0)
        throw ConfigError("epochs and steps_per_epoch must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.sequence_length < 1) throw ConfigError("sequence_length must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
        throw ConfigError("epsilon must lie in (0, 1)");
    if (cfg.fixed_timestep != 0.0 &&
        !(cfg.fixed_timestep >= cfg.epsilon && cfg.fixed_timestep < 1.0))
        throw ConfigError("fixed_timestep must lie in [epsilon, 1)");
    if (!(cfg.schedule.lambda_init >= 0.0 &&
          cfg.schedule.lambda_init <= cfg.schedule.lambda_max &&
          cfg.schedule.lambda_max <= 1.0))
        throw ConfigError("schedule requires 0 <= lambda_init <= lambda_max <= 1");
    if (!(cfg.schedule.sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(cfg.schedule.const_lambda >= 0.0 && cfg.schedule.const_lambda <= 1.0))
        throw ConfigError("const_lambda must lie in [0, 1]");
    if (cfg.pipeline == Pipeline::cross_tokenizer) {
        if (cfg.world.alphabet.empty())
            throw ConfigError("cross pipeline requires a byte alphabet");
        if (static_cast<int>(cfg.world.alphabet.size()) !=
            cfg.world.spec.vocab_size())
            throw ConfigError("world spec size must match the alphabet length");
        if (cfg.world.fit_corpus_docs < 1 || cfg.world.fit_doc_length < 2)
            throw ConfigError("teacher fit corpus must have docs with >= 2 tokens");
        MergeVocab probe(cfg.world.alphabet, cfg.world.teacher_merges);
        (void)probe;
    } else if (cfg.world.spec.vocab_size() < 2) {
        throw ConfigError("shared pipeline world spec missing or too small");
    }
    if (cfg.kl_eval.views < 1) throw ConfigError("kl_eval.views must be >= 1");
}

std::vector<NoisedView> make_eval_views(const MarkovSpec& spec, int count,
                                        int length, std::uint64_t seed,
                                        double epsilon) {
    std::vector<NoisedView> views;
    views.reserve(count);
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        Tokens clean;
        Token cur = static_cast<Token>(rng.categorical(spec.initial));
        clean.push_back(cur);
        for (int k = 1; k < length; ++k) {
            cur = static_cast<Token>(rng.categorical(spec.transition[cur]));
            clean.push_back(cur);
        }
        const double t = epsilon + rng.uniform01() * (1.0 - epsilon);
        std::vector<int> mask;
        while (mask.empty()) {
            for (int pos = 0; pos < length; ++pos)
                if (rng.uniform01() < t) mask.push_back(pos);
        }
        views.push_back(make_view(clean, t, std::move(mask), epsilon));
    }
    return views;
}

double kl_to_teacher(const FeaturizedDenoiser& model, const ExactTeacher& teacher,
                     const std::vector<NoisedView>& eval_views,
                     KlDirection direction) {
    if (model.feature_spec.vocab_size != teacher.spec().vocab_size())
        throw PreconditionError(
            "kl_to_teacher requires a shared vocabulary between model and teacher");
    double total = 0.0;
    long positions = 0;
    for (const NoisedView& view : eval_views) {
        const PositionVectors teacher_probs =
            teacher.forward_backward_posterior(view);
        const PositionVectors logits = forward(model, view);
        for (const auto& [pos, p_teacher] : teacher_probs) {
            const std::vector<double> q_student = softmax(logits.at(pos));
            if (direction == KlDirection::teacher_to_student)
                total += kl_divergence(p_teacher, q_student);
            else
                total += kl_divergence(q_student, p_teacher);
            ++positions;
        }
    }
    return positions == 0 ? 0.0 : total / static_cast<double>(positions);
}

namespace {

struct CrossWorld {
    MergeVocab vocab;
    ExactTeacher teacher;
};

// Fits the teacher's chain over its own token ids, on a corpus file (one
// document per line) when configured, otherwise on documents drawn from the
// byte-level world process.
CrossWorld build_cross_world(const ExperimentConfig& cfg) {
    MergeVocab vocab(cfg.world.alphabet, cfg.world.teacher_merges);
    std::vector<Tokens> corpus;
    if (!cfg.world.fit_corpus_path.empty()) {
        std::ifstream in(cfg.world.fit_corpus_path);
        if (!in)
            throw ConfigError("cannot open fit corpus " + cfg.world.fit_corpus_path);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) corpus.push_back(tokenize_merges(line, vocab).tokens);
    } else {
        corpus.reserve(cfg.world.fit_corpus_docs);
        for (int d = 0; d < cfg.world.fit_corpus_docs; ++d) {
            const Tokens char_ids =
                sample_sequence(cfg.world.spec, cfg.world.fit_doc_length,
                                derive_seed(cfg.world.fit_seed, 11, d));
            std::string bytes;
            for (Token id : char_ids) bytes.push_back(cfg.world.alphabet[id]);
            corpus.push_back(tokenize_merges(bytes, vocab).tokens);
        }
    }
    MarkovSpec teacher_spec = fit_markov(corpus, vocab.size());
    return CrossWorld{std::move(vocab), ExactTeacher(std::move(teacher_spec))};
}

FeaturizedDenoiser init_student(const ExperimentConfig& cfg, int vocab_size) {
    FeaturizedDenoiser model = FeaturizedDenoiser::zero({vocab_size, 4});
    if (cfg.init == ExperimentConfig::Init::adversarial) {
        // Pins nearly all mass on token 0, driving the student's probability
        // of typical clean tokens toward zero.
        model.bias.assign(vocab_size, -cfg.adversarial_scale);
        model.bias[0] = cfg.adversarial_scale;
    }
    return model;
}

// Evaluates the teacher on `view`, optionally with complementary
// demonstration, returning log posteriors and the number of passes.
MergedTeacherOutput teacher_logits_for(const ExactTeacher& teacher,
                                       const NoisedView& view, bool compdemo,
                                       double rho, std::uint64_t split_seed) {
    if (compdemo) {
        const SplitMasks split = complementary_split(view.mask_set, rho, split_seed);
        return two_pass_teacher(
            [&](const NoisedView& v) { return teacher.log_posterior(v); }, view,
            split);
    }
    MergedTeacherOutput out;
    out.logits = teacher.log_posterior(view);
    out.pass_count = 1;
    return out;
}

} // namespace

MetricsLog run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    MetricsLog log;
    log.config = cfg;

    const bool cross = cfg.pipeline == Pipeline::cross_tokenizer;
    const int student_vocab =
        cross ? static_cast<int>(cfg.world.alphabet.size())
              : cfg.world.spec.vocab_size();

    ExactTeacher shared_teacher(cfg.world.spec);
    std::optional<CrossWorld> cross_world;
    if (cross) cross_world.emplace(build_cross_world(cfg));

    FeaturizedDenoiser model = init_student(cfg, student_vocab);
    OptimizerState opt{cfg.learning_rate, 0};

    std::vector<NoisedView> eval_views;
    if (!cross) {
        eval_views = make_eval_views(cfg.world.spec, cfg.kl_eval.views,
                                     cfg.sequence_length, cfg.kl_eval.seed,
                                     cfg.epsilon);
        log.epoch_kl.push_back(
            kl_to_teacher(model, shared_teacher, eval_views, cfg.kl_eval.direction));
    }

    const long total_steps =
        static_cast<long>(cfg.epochs) * static_cast<long>(cfg.steps_per_epoch);
    long teacher_passes = 0;

    for (long step = 0; step < total_steps; ++step) {
        const double progress =
            static_cast<double>(step) / static_cast<double>(total_steps);
        const double t =
            cfg.fixed_timestep != 0.0
                ? cfg.fixed_timestep
                : sample_timestep(derive_seed(cfg.seed, kTimestepStream, step),
                                  cfg.epsilon);
        const double lam = lambda_t(t, progress, cfg.schedule);

        ParamGrad batch_grad = ParamGrad::zero(model.feature_spec);
        ParamGrad distill_batch_grad = ParamGrad::zero(model.feature_spec);
        double ce_sum = 0.0, distill_sum = 0.0;
        int ce_count = 0, distill_count = 0;

        for (int b = 0; b < cfg.batch_size; ++b) {
            const std::uint64_t item = static_cast<std::uint64_t>(step) *
                                           static_cast<std::uint64_t>(cfg.batch_size) +
                                       static_cast<std::uint64_t>(b);
            const Tokens clean = sample_sequence(
                cfg.world.spec, cfg.sequence_length,
                derive_seed(cfg.seed, kDataStream, item));
            const NoisedView view = apply_mask(
                clean, t, derive_seed(cfg.seed, kMaskStream, item), cfg.epsilon);

            CeResult ce = ce_loss_and_grad(model, view);
            if (!ce.skipped) {
                double ce_scale = 1.0;
                if (cfg.ce_inverse_timestep) ce_scale = 1.0 / t;
                ce_sum += ce_scale * ce.loss;
                batch_grad.add_scaled(ce.grad, ce_scale);
                ++ce_count;
            }

            if (cfg.distill_weight == 0.0 || view.mask_set.empty()) continue;

            DistillResult dist;
            if (!cross) {
                const MergedTeacherOutput teacher_out = teacher_logits_for(
                    shared_teacher, view, cfg.compdemo, cfg.rho,
                    derive_seed(cfg.seed, kSplitStream, item));
                teacher_passes += teacher_out.pass_count;
                DistillContext ctx;
                ctx.teacher_logits = &teacher_out.logits;
                ctx.lambda = lam;
                ctx.temperature = cfg.temperature;
                ctx.timestep = t;
                ctx.schedule = &cfg.schedule;
                dist = distill_grad(model, view, cfg.objective, ctx);
            } else {
                std::string bytes;
                for (Token id : clean) bytes.push_back(cfg.world.alphabet[id]);
                const TokenizedText student_text =
                    tokenize_char(bytes, cfg.world.alphabet);
                const TokenizedText teacher_text =
                    tokenize_merges(bytes, cross_world->vocab);
                const ChunkTable table = align_chunks(student_text, teacher_text);
                const std::vector<int> active = active_chunks(table, view.mask_set);
                if (active.empty()) continue;

                const std::vector<int> projected =
                    project_mask(student_text, view.mask_set, teacher_text);
                const NoisedView teacher_view = make_view(
                    teacher_text.tokens, t, projected, cfg.epsilon);
                const MergedTeacherOutput teacher_out = teacher_logits_for(
                    cross_world->teacher, teacher_view, cfg.compdemo, cfg.rho,
                    derive_seed(cfg.seed, kSplitStream, item));
                teacher_passes += teacher_out.pass_count;

                std::vector<double> teacher_lp(teacher_text.size(), 0.0);
                for (const auto& [pos, logp] : teacher_out.logits)
                    teacher_lp[pos] = logp[teacher_text.tokens[pos]];
                const auto [a_student, a_teacher] = build_matrices(
                    table, student_text.size(), teacher_text.size());
                (void)a_student;
                const ChunkProbs p_t = chunk_probs(
                    chunk_logprobs(teacher_lp, a_teacher), cfg.temperature);

                DistillContext ctx;
                ctx.table = &table;
                ctx.teacher_chunk_probs = &p_t.probs;
                ctx.active = &active;
                ctx.lambda = lam;
                ctx.temperature = cfg.temperature;
                ctx.timestep = t;
                dist = distill_grad(model, view, cfg.objective, ctx);
            }

            if (!dist.skipped) {
                double scale = 1.0;
                if (cfg.lambda_scale_distill) scale = 1.0 - lam;
                distill_sum += scale * dist.loss;
                distill_batch_grad.add_scaled(dist.grad, scale);
                ++distill_count;
            }
        }

        const double ce_mean = ce_count > 0 ? ce_sum / ce_count : 0.0;
        const double distill_mean =
            distill_count > 0 ? distill_sum / distill_count : 0.0;
        if (ce_count > 0) batch_grad.scale(1.0 / ce_count);
        if (distill_count > 0) distill_batch_grad.scale(1.0 / distill_count);

        LossReport report =
            is_chunk_objective(cfg.objective)
                ? loss_cross(ce_mean, distill_mean, cfg.distill_weight,
                             cfg.objective == DistillObjective::fwd_calm
                                 ? CalmVariant::fwd_calm
                                 : (cfg.objective == DistillObjective::calm_tidal
                                        ? CalmVariant::calm_tidal
                                        : CalmVariant::rev_calm))
                : loss_shared(ce_mean, distill_mean, cfg.distill_weight);
        if (!std::isfinite(report.total))
            throw NumericalAbort("non-finite loss at step " + std::to_string(step) +
                                 " (ce=" + format_double(ce_mean) +
                                 ", distill=" + format_double(distill_mean) + ")");

        batch_grad.add_scaled(distill_batch_grad, cfg.distill_weight);
        sgd_step(model, batch_grad, opt);

        StepRecord record;
        record.step = static_cast<int>(step);
        record.progress = progress;
        record.timestep = t;
        record.lambda = lam;
        record.ce = report.ce;
        record.distill = report.distill;
        record.total = report.total;
        record.teacher_passes = teacher_passes;
        record.distill_grad_norm = distill_batch_grad.norm();
        log.steps.push_back(record);

        if (!cross && (step + 1) % cfg.steps_per_epoch == 0)
            log.epoch_kl.push_back(kl_to_teacher(model, shared_teacher, eval_views,
                                                 cfg.kl_eval.direction));
    }

    log.total_teacher_passes = teacher_passes;
    log.final_checkpoint = model.to_json();
    return log;
}

std::string MetricsLog::to_csv() const {
    std::string out =
        "step,progress,timestep,lambda,ce,distill,total,teacher_passes,"
        "distill_grad_norm\n";
    for (const StepRecord& r : steps) {
        out += std::to_string(r.step) + ',' + format_double(r.progress) + ',' +
               format_double(r.timestep) + ',' + format_double(r.lambda) + ',' +
               format_double(r.ce) + ',' + format_double(r.distill) + ',' +
               format_double(r.total) + ',' + std::to_string(r.teacher_passes) +
               ',' + format_double(r.distill_grad_norm) + '\n';
    }
    return out;
}

std::string MetricsLog::summary_json(const std::string& preset) const {
    nlohmann::ordered_json j;
    if (!preset.empty()) j["preset"] = preset;
    j["pipeline"] = to_string(config.pipeline);
    j["objective"] = to_string(config.objective);
    j["seed"] = config.seed;
    j["rho"] = config.rho;
    j["temperature"] = config.temperature;
    j["lambda_init"] = config.schedule.lambda_init;
    j["lambda_max"] = config.schedule.lambda_max;
    j["compdemo"] = config.compdemo;
    j["distill_weight"] = config.distill_weight;
    j["epochs"] = config.epochs;
    j["steps_per_epoch"] = config.steps_per_epoch;
    j["batch_size"] = config.batch_size;
    j["sequence_length"] = config.sequence_length;
    j["learning_rate"] = config.learning_rate;
    j["teacher_passes"] = total_teacher_passes;
    if (config.pipeline == Pipeline::shared_tokenizer) {
        j["epoch_kl"] = epoch_kl;
        j["final_kl"] = final_kl();
    } else {
        j["epoch_kl"] = nlohmann::ordered_json::array();
        j["final_kl"] = nullptr;
    }
    if (!steps.empty()) {
        j["final_ce"] = steps.back().ce;
        j["final_distill"] = steps.back().distill;
        j["final_total"] = steps.back().total;
        j["first_step_distill_grad_norm"] = steps.front().distill_grad_norm;
    }
    return j.dump(2) + "\n";
}

ExperimentConfig ablation_preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.pipeline = Pipeline::shared_tokenizer;
    cfg.objective = DistillObjective::tidal;
    cfg.schedule = ScheduleConfig{};  // 0.1 -> 0.9 cosine, dual axis
    cfg.compdemo = true;
    cfg.rho = 0.5;
    cfg.temperature = 2.0;
    cfg.distill_weight = 1.0;
    cfg.epochs = 4;
    cfg.steps_per_epoch = 500;
    cfg.batch_size = 32;
    cfg.sequence_length = 8;
    cfg.learning_rate = 0.1;
    cfg.world.spec = MarkovSpec::lazy({0.4, 0.3, 0.2, 0.1}, 0.1);

    if (name == "full") {
        return cfg;
    } else if (name == "wo_tstep") {
        cfg.schedule.mode = ScheduleMode::train_only;
        return cfg;
    } else if (name == "baseline_tstep_only") {
        cfg.schedule.mode = ScheduleMode::timestep_only;
        return cfg;
    } else if (name == "wo_compdemo") {
        cfg.compdemo = false;
        return cfg;
    } else if (name == "ce_only") {
        cfg.distill_weight = 0.0;
        cfg.compdemo = false;
        return cfg;
    }
    throw ConfigError("unknown preset: " + name);
}

} // namespace distill
