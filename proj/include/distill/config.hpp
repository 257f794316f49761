#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "distill/markov.hpp"
#include "distill/tokenizer.hpp"
#include "distill/trainer.hpp"

namespace distill {

// Parses and validates the JSON run configs. Every object is checked
// against its schema first: unknown keys are rejected with a ConfigError.

nlohmann::json load_json_file(const std::string& path);

ExperimentConfig parse_experiment_config(const nlohmann::json& j);

struct AlignConfig {
    std::string alphabet;
    std::vector<ByteSpan> student_special;
    MergeTable teacher_merges;
    std::vector<ByteSpan> teacher_special;
};

AlignConfig parse_align_config(const nlohmann::json& j);

struct OracleConfig {
    MarkovSpec spec;
    Tokens view_tokens;  // kMaskToken (-1) marks masked positions
    int max_enum_length = 12;
    bool forward_backward = true;
};

OracleConfig parse_oracle_config(const nlohmann::json& j);

struct ScheduleFileConfig {
    ScheduleConfig schedule;
    double epsilon = 1e-3;
};

ScheduleFileConfig parse_schedule_config(const nlohmann::json& j);

} // namespace distill
