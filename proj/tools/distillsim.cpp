// distillsim: reproducible CLI front end for the distillation simulator.
// Subcommands: schedule, align, graddiag, distill, oracle.
// Exit codes: 0 success, 1 usage/config error, 2 numerical abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distill/calm.hpp"
#include "distill/chunkalign.hpp"
#include "distill/config.hpp"
#include "distill/errors.hpp"
#include "distill/teacher.hpp"
#include "distill/tidal.hpp"
#include "distill/tokenizer.hpp"
#include "distill/trainer.hpp"

namespace {

using namespace distill;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v + 0.0);  // folds -0 into 0
    return buf;
}

std::string fmt_fixed12(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12f", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output path " + path);
    out << content;
    if (!out) throw ConfigError("failed writing to " + path);
}

int cmd_schedule(const std::string& config_path, const std::string& out_path) {
    ScheduleFileConfig cfg;
    if (!config_path.empty())
        cfg = parse_schedule_config(load_json_file(config_path));
    std::string csv = "p,t,lambda_train,lambda_t,midrange_weight\n";
    for (int i = 0; i <= 100; ++i) {
        const double p = i / 100.0;
        for (int k = 0; k < 100; ++k) {
            const double t = cfg.epsilon + k * (1.0 - cfg.epsilon) / 100.0;
            csv += fmt(p) + ',' + fmt(t) + ',' + fmt(lambda_train(p, cfg.schedule)) +
                   ',' + fmt(lambda_t(t, p, cfg.schedule)) + ',' +
                   fmt(midrange_weight(t, cfg.schedule.sigma)) + '\n';
        }
    }
    write_file(out_path, csv);
    return 0;
}

int cmd_align(const std::string& text_path, const std::string& config_path,
              const std::string& out_path) {
    const AlignConfig cfg = parse_align_config(load_json_file(config_path));
    std::ifstream in(text_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open text file " + text_path);
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw ConfigError("text file has no content on its first line");

    const TokenizedText student =
        tokenize_char(line, cfg.alphabet, cfg.student_special);
    const MergeVocab vocab(cfg.alphabet, cfg.teacher_merges);
    const TokenizedText teacher =
        tokenize_merges(line, vocab, cfg.teacher_special);
    const ChunkTable table = align_chunks(student, teacher);

    std::string csv = "chunk,byte_begin,byte_end,student_tokens,teacher_tokens\n";
    auto join = [](const std::vector<int>& ids) {
        std::string s;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i) s += ';';
            s += std::to_string(ids[i]);
        }
        return s;
    };
    for (std::size_t c = 0; c < table.size(); ++c) {
        csv += std::to_string(c) + ',' + std::to_string(table.chunk_spans[c].begin) +
               ',' + std::to_string(table.chunk_spans[c].end) + ',' +
               join(table.student_members[c]) + ',' + join(table.teacher_members[c]) +
               '\n';
    }
    write_file(out_path, csv);
    return 0;
}

int cmd_graddiag(const std::string& out_path) {
    std::string csv =
        "p_s,p_t,fwd_calm,rev_calm,fwd_grad,rev_grad,fd_fwd,fd_rev,rev_bound\n";
    const std::vector<double> pt_grid = {0.5, 0.9, 0.99};
    const std::vector<double> ps_grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2,
                                         1e-1, 0.3,  0.5,  0.7,  0.9};
    for (double pt : pt_grid)
        for (double ps : ps_grid) {
            const GradDiagnostics d = grad_diagnostics(ps, pt);
            csv += fmt(d.p_s) + ',' + fmt(d.p_t) + ',' + fmt(d.fwd_loss) + ',' +
                   fmt(d.rev_loss) + ',' + fmt(d.fwd_grad) + ',' + fmt(d.rev_grad) +
                   ',' + fmt(d.fd_fwd) + ',' + fmt(d.fd_rev) + ',' +
                   fmt(d.rev_bound) + '\n';
        }
    write_file(out_path, csv);
    return 0;
}

int cmd_distill(const std::string& config_path, const std::string& preset,
                long long seed_override, const std::string& out_dir) {
    if (config_path.empty() && preset.empty())
        throw ConfigError("distill requires --config or --preset");
    if (!config_path.empty() && !preset.empty())
        throw ConfigError("give either --config or --preset, not both");
    ExperimentConfig cfg =
        preset.empty() ? parse_experiment_config(load_json_file(config_path))
                       : ablation_preset(preset);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

    const MetricsLog log = run_experiment(cfg);
    std::filesystem::create_directories(out_dir);
    write_file((std::filesystem::path(out_dir) / "metrics.csv").string(),
               log.to_csv());
    write_file((std::filesystem::path(out_dir) / "summary.json").string(),
               log.summary_json(preset));
    write_file((std::filesystem::path(out_dir) / "model.json").string(),
               log.final_checkpoint);
    return 0;
}

int cmd_oracle(const std::string& config_path, const std::string& out_path) {
    const OracleConfig cfg = parse_oracle_config(load_json_file(config_path));
    ExactTeacher teacher(cfg.spec, cfg.max_enum_length, cfg.forward_backward);

    Tokens clean = cfg.view_tokens;
    std::vector<int> mask;
    for (int i = 0; i < static_cast<int>(clean.size()); ++i)
        if (clean[i] == kMaskToken) {
            mask.push_back(i);
            clean[i] = 0;  // placeholder under the mask
        }
    const double epsilon = 1e-3;
    const NoisedView view = make_view(clean, 0.5, mask, epsilon);
    const PositionVectors posteriors = teacher.exact_posterior(view);

    std::string out = "{\n  \"posteriors\": [";
    bool first = true;
    for (const auto& [pos, probs] : posteriors) {
        if (!first) out += ',';
        first = false;
        out += "\n    {\"position\": " + std::to_string(pos) +
               ", \"probabilities\": [";
        for (std::size_t v = 0; v < probs.size(); ++v) {
            if (v) out += ", ";
            out += fmt_fixed12(probs[v]);
        }
        out += "]}";
    }
    out += first ? "]\n}\n" : "\n  ]\n}\n";
    if (out_path.empty())
        std::cout << out;
    else
        write_file(out_path, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"toy distillation simulator for masked-diffusion language models"};
    app.require_subcommand(1);

    std::string config_path, out_path, text_path, preset;
    long long seed_override = -1;

    CLI::App* schedule = app.add_subcommand(
        "schedule", "dump (p, t, lambda, weight) grids as CSV");
    schedule->add_option("--config", config_path, "schedule config JSON");
    schedule->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* align = app.add_subcommand(
        "align", "chunk-align two tokenizations of a text file");
    align->add_option("--text", text_path, "input text file")->required();
    align->add_option("--config", config_path, "tokenizer config JSON")->required();
    align->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* graddiag = app.add_subcommand(
        "graddiag", "sweep forward/reverse chunk-objective gradients");
    graddiag->add_option("--out", out_path, "output CSV path")->required();

    CLI::App* distill_cmd = app.add_subcommand(
        "distill", "run a distillation experiment");
    distill_cmd->add_option("--config", config_path, "experiment config JSON");
    distill_cmd->add_option("--preset", preset,
                            "full|wo_tstep|baseline_tstep_only|wo_compdemo|ce_only");
    distill_cmd->add_option("--seed", seed_override, "override the config seed");
    std::string out_dir = ".";
    distill_cmd->add_option("--out", out_dir, "output directory");

    CLI::App* oracle = app.add_subcommand(
        "oracle", "print exact posteriors for a masked view");
    oracle->add_option("--config", config_path, "oracle config JSON")->required();
    oracle->add_option("--out", out_path, "output JSON path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (schedule->parsed()) return cmd_schedule(config_path, out_path);
        if (align->parsed()) return cmd_align(text_path, config_path, out_path);
        if (graddiag->parsed()) return cmd_graddiag(out_path);
        if (distill_cmd->parsed())
            return cmd_distill(config_path, preset, seed_override, out_dir);
        if (oracle->parsed()) return cmd_oracle(config_path, out_path);
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
