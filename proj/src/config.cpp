#include "distill/config.hpp"

#include <fstream>
#include <set>

#include "distill/errors.hpp"

namespace distill {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
    if (!obj.is_object())
        throw ConfigError(context + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + context);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("key '" + key + "' has the wrong type");
    }
}

MarkovSpec parse_spec(const json& j, const std::string& context) {
    check_keys(j, {"kind", "vocab_size", "self_prob", "blocks", "stay_prob",
                   "pi", "laziness", "initial", "transition"},
               context);
    const std::string kind = get_or<std::string>(j, "kind", "explicit");
    if (kind == "sticky") {
        return MarkovSpec::sticky(get_or<int>(j, "vocab_size", 4),
                                  get_or<double>(j, "self_prob", 0.7));
    }
    if (kind == "uniform") {
        return MarkovSpec::uniform(get_or<int>(j, "vocab_size", 4));
    }
    if (kind == "block_sticky") {
        try {
            return MarkovSpec::block_sticky(get_or<int>(j, "vocab_size", 4),
                                            get_or<int>(j, "blocks", 2),
                                            get_or<double>(j, "stay_prob", 0.9));
        } catch (const PreconditionError& e) {
            throw ConfigError(context + ": " + e.what());
        }
    }
    if (kind == "lazy") {
        if (!j.contains("pi")) throw ConfigError(context + ": lazy spec needs pi");
        try {
            return MarkovSpec::lazy(j.at("pi").get<std::vector<double>>(),
                                    get_or<double>(j, "laziness", 0.1));
        } catch (const json::exception&) {
            throw ConfigError(context + ": malformed pi");
        } catch (const PreconditionError& e) {
            throw ConfigError(context + ": " + e.what());
        }
    }
    if (kind == "explicit") {
        if (!j.contains("initial") || !j.contains("transition"))
            throw ConfigError(context + ": explicit spec needs initial and transition");
        try {
            return MarkovSpec(j.at("initial").get<std::vector<double>>(),
                              j.at("transition")
                                  .get<std::vector<std::vector<double>>>());
        } catch (const json::exception&) {
            throw ConfigError(context + ": malformed initial or transition");
        } catch (const PreconditionError& e) {
            throw ConfigError(context + ": " + e.what());
        }
    }
    throw ConfigError(context + ": unknown spec kind '" + kind + "'");
}

std::vector<ByteSpan> parse_regions(const json& j, const std::string& context) {
    std::vector<ByteSpan> regions;
    if (!j.is_array()) throw ConfigError(context + " must be an array of [begin, end]");
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2)
            throw ConfigError(context + " entries must be [begin, end]");
        ByteSpan span{entry.at(0).get<std::size_t>(), entry.at(1).get<std::size_t>()};
        if (span.end <= span.begin)
            throw ConfigError(context + " spans must be non-empty half-open intervals");
        regions.push_back(span);
    }
    return regions;
}

MergeTable parse_merges(const json& j, const std::string& context) {
    MergeTable merges;
    if (!j.is_array()) throw ConfigError(context + " must be an array of pairs");
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2)
            throw ConfigError(context + " entries must be [left, right] strings");
        merges.emplace_back(entry.at(0).get<std::string>(),
                            entry.at(1).get<std::string>());
    }
    return merges;
}

ScheduleConfig parse_schedule_obj(const json& j) {
    check_keys(j, {"mode", "lambda_init", "lambda_max", "const_lambda", "sigma",
                   "midrange_enabled"},
               "schedule");
    ScheduleConfig cfg;
    const std::string mode = get_or<std::string>(j, "mode", "dual_axis");
    if (mode == "dual_axis") cfg.mode = ScheduleMode::dual_axis;
    else if (mode == "train_only") cfg.mode = ScheduleMode::train_only;
    else if (mode == "timestep_only") cfg.mode = ScheduleMode::timestep_only;
    else if (mode == "constant") cfg.mode = ScheduleMode::constant;
    else throw ConfigError("unknown schedule mode '" + mode + "'");
    cfg.lambda_init = get_or<double>(j, "lambda_init", cfg.lambda_init);
    cfg.lambda_max = get_or<double>(j, "lambda_max", cfg.lambda_max);
    cfg.const_lambda = get_or<double>(j, "const_lambda", cfg.const_lambda);
    cfg.sigma = get_or<double>(j, "sigma", cfg.sigma);
    cfg.midrange_enabled = get_or<bool>(j, "midrange_enabled", cfg.midrange_enabled);
    return cfg;
}

} // namespace

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
}

ExperimentConfig parse_experiment_config(const json& j) {
    check_keys(j,
               {"pipeline", "seed", "epochs", "steps_per_epoch", "batch_size",
                "sequence_length", "learning_rate", "temperature", "objective",
                "distill_weight", "epsilon", "compdemo", "schedule",
                "lambda_scale_distill", "allow_rev_calm_lambda_scale",
                "ce_inverse_timestep", "fixed_timestep", "init",
                "adversarial_scale", "world", "kl_eval", "cross"},
               "run config");
    ExperimentConfig cfg;

    const std::string pipeline =
        get_or<std::string>(j, "pipeline", "shared_tokenizer");
    if (pipeline == "shared_tokenizer") cfg.pipeline = Pipeline::shared_tokenizer;
    else if (pipeline == "cross_tokenizer") cfg.pipeline = Pipeline::cross_tokenizer;
    else throw ConfigError("unknown pipeline '" + pipeline + "'");

    const std::string objective = get_or<std::string>(
        j, "objective",
        cfg.pipeline == Pipeline::shared_tokenizer ? "tidal" : "rev_calm");
    if (objective == "tidal") cfg.objective = DistillObjective::tidal;
    else if (objective == "fwd_calm") cfg.objective = DistillObjective::fwd_calm;
    else if (objective == "calm_tidal") cfg.objective = DistillObjective::calm_tidal;
    else if (objective == "rev_calm") cfg.objective = DistillObjective::rev_calm;
    else throw ConfigError("unknown objective '" + objective + "'");

    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.epochs = get_or<int>(j, "epochs", cfg.epochs);
    cfg.steps_per_epoch = get_or<int>(j, "steps_per_epoch", cfg.steps_per_epoch);
    cfg.batch_size = get_or<int>(j, "batch_size", cfg.batch_size);
    cfg.sequence_length = get_or<int>(j, "sequence_length", cfg.sequence_length);
    cfg.learning_rate = get_or<double>(j, "learning_rate", cfg.learning_rate);
    cfg.temperature = get_or<double>(j, "temperature", cfg.temperature);
    cfg.distill_weight = get_or<double>(j, "distill_weight", cfg.distill_weight);
    cfg.epsilon = get_or<double>(j, "epsilon", cfg.epsilon);
    cfg.lambda_scale_distill =
        get_or<bool>(j, "lambda_scale_distill", cfg.lambda_scale_distill);
    cfg.allow_rev_lambda_scale =
        get_or<bool>(j, "allow_rev_calm_lambda_scale", cfg.allow_rev_lambda_scale);
    cfg.ce_inverse_timestep =
        get_or<bool>(j, "ce_inverse_timestep", cfg.ce_inverse_timestep);
    cfg.fixed_timestep = get_or<double>(j, "fixed_timestep", cfg.fixed_timestep);
    cfg.adversarial_scale =
        get_or<double>(j, "adversarial_scale", cfg.adversarial_scale);

    const std::string init = get_or<std::string>(j, "init", "zero");
    if (init == "zero") cfg.init = ExperimentConfig::Init::zero;
    else if (init == "adversarial") cfg.init = ExperimentConfig::Init::adversarial;
    else throw ConfigError("unknown init mode '" + init + "'");

    if (j.contains("compdemo")) {
        check_keys(j.at("compdemo"), {"enabled", "rho"}, "compdemo");
        cfg.compdemo = get_or<bool>(j.at("compdemo"), "enabled", false);
        cfg.rho = get_or<double>(j.at("compdemo"), "rho", cfg.rho);
    }
    if (j.contains("schedule")) cfg.schedule = parse_schedule_obj(j.at("schedule"));
    if (j.contains("kl_eval")) {
        check_keys(j.at("kl_eval"), {"views", "seed", "direction"}, "kl_eval");
        cfg.kl_eval.views = get_or<int>(j.at("kl_eval"), "views", cfg.kl_eval.views);
        cfg.kl_eval.seed =
            get_or<std::uint64_t>(j.at("kl_eval"), "seed", cfg.kl_eval.seed);
        const std::string direction = get_or<std::string>(
            j.at("kl_eval"), "direction", "teacher_to_student");
        if (direction == "teacher_to_student")
            cfg.kl_eval.direction = KlDirection::teacher_to_student;
        else if (direction == "student_to_teacher")
            cfg.kl_eval.direction = KlDirection::student_to_teacher;
        else
            throw ConfigError("unknown kl_eval direction '" + direction + "'");
    }
    if (j.contains("world")) cfg.world.spec = parse_spec(j.at("world"), "world");
    else cfg.world.spec = MarkovSpec::sticky(4, 0.7);

    if (j.contains("cross")) {
        const json& c = j.at("cross");
        check_keys(c,
                   {"alphabet", "teacher_merges", "fit_corpus_path",
                    "fit_corpus_docs", "fit_doc_length", "fit_seed"},
                   "cross");
        cfg.world.alphabet = get_or<std::string>(c, "alphabet", "");
        if (c.contains("teacher_merges"))
            cfg.world.teacher_merges =
                parse_merges(c.at("teacher_merges"), "teacher_merges");
        cfg.world.fit_corpus_path =
            get_or<std::string>(c, "fit_corpus_path", cfg.world.fit_corpus_path);
        cfg.world.fit_corpus_docs =
            get_or<int>(c, "fit_corpus_docs", cfg.world.fit_corpus_docs);
        cfg.world.fit_doc_length =
            get_or<int>(c, "fit_doc_length", cfg.world.fit_doc_length);
        cfg.world.fit_seed = get_or<std::uint64_t>(c, "fit_seed", cfg.world.fit_seed);
    }

    validate_config(cfg);
    return cfg;
}

AlignConfig parse_align_config(const json& j) {
    check_keys(j,
               {"alphabet", "student_special_regions", "teacher_merges",
                "teacher_special_regions"},
               "align config");
    AlignConfig cfg;
    cfg.alphabet = get_or<std::string>(j, "alphabet", "");
    if (cfg.alphabet.empty())
        throw ConfigError("align config requires a non-empty alphabet");
    if (j.contains("student_special_regions"))
        cfg.student_special =
            parse_regions(j.at("student_special_regions"), "student_special_regions");
    if (j.contains("teacher_merges"))
        cfg.teacher_merges = parse_merges(j.at("teacher_merges"), "teacher_merges");
    if (j.contains("teacher_special_regions"))
        cfg.teacher_special =
            parse_regions(j.at("teacher_special_regions"), "teacher_special_regions");
    return cfg;
}

OracleConfig parse_oracle_config(const json& j) {
    check_keys(j, {"spec", "view", "max_enum_length", "forward_backward"},
               "oracle config");
    OracleConfig cfg;
    if (!j.contains("spec") || !j.contains("view"))
        throw ConfigError("oracle config requires spec and view");
    cfg.spec = parse_spec(j.at("spec"), "spec");
    try {
        cfg.view_tokens = j.at("view").get<Tokens>();
    } catch (const json::exception&) {
        throw ConfigError("oracle view must be an array of token ids (-1 = mask)");
    }
    cfg.max_enum_length = get_or<int>(j, "max_enum_length", cfg.max_enum_length);
    cfg.forward_backward = get_or<bool>(j, "forward_backward", cfg.forward_backward);
    return cfg;
}

ScheduleFileConfig parse_schedule_config(const json& j) {
    check_keys(j, {"schedule", "epsilon"}, "schedule config");
    ScheduleFileConfig cfg;
    if (j.contains("schedule")) cfg.schedule = parse_schedule_obj(j.at("schedule"));
    cfg.epsilon = get_or<double>(j, "epsilon", cfg.epsilon);
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
        throw ConfigError("epsilon must lie in (0, 1)");
    return cfg;
}

} // namespace distill
