#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "deconvdec/checkpoint.hpp"
#include "deconvdec/config.hpp"
#include "deconvdec/data.hpp"
#include "deconvdec/metrics.hpp"
#include "deconvdec/trainer.hpp"
#include "deconvdec/verify.hpp"

namespace {

using namespace deconvdec;

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitCheckpointMismatch = 3;

std::uint64_t seed_override(std::uint64_t fallback) {
    const char* env = std::getenv("DECONVDEC_SEED");
    if (env == nullptr || *env == '\0') {
        return fallback;
    }
    try {
        return std::stoull(env);
    } catch (const std::exception&) {
        throw ConfigError("DECONVDEC_SEED is not an integer: " + std::string(env));
    }
}

std::vector<std::string> read_lines_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return lines;
}

int cmd_train(const std::string& config_path, const std::string& synth_kind,
              int synth_pairs, int synth_vocab, int synth_max_len, bool no_deconv) {
    RunConfig config = RunConfig::parse_file(config_path);
    config.seed = seed_override(config.seed);
    if (no_deconv) {
        config.model.deconv_enabled = false;
    }
    if (!synth_kind.empty()) {
        SynthKind kind = parse_synth_kind(synth_kind);
        std::filesystem::create_directories(config.out_dir);
        config.train_src = config.out_dir + "/synth_train.src";
        config.train_tgt = config.out_dir + "/synth_train.tgt";
        config.valid_src = config.out_dir + "/synth_valid.src";
        config.valid_tgt = config.out_dir + "/synth_valid.tgt";
        synth_task(kind, synth_vocab, synth_pairs, synth_max_len, config.seed,
                   config.train_src, config.train_tgt);
        int valid_pairs = std::max(50, synth_pairs / 10);
        synth_task(kind, synth_vocab, valid_pairs, synth_max_len, config.seed + 1,
                   config.valid_src, config.valid_tgt);
    }
    TrainResult result = train(config, std::cout);
    std::cout << "best_epoch " << result.best_epoch << " best_bleu "
              << result.best_bleu << '\n'
              << "best_checkpoint " << result.best_checkpoint << '\n'
              << "final_checkpoint " << result.final_checkpoint << '\n';
    return kExitOk;
}

int cmd_translate(const std::string& checkpoint_path, const std::string& input_path,
                  int beam_width, int max_len, const std::string& trace_prefix) {
    CheckpointData ckpt = load_checkpoint(checkpoint_path);
    if (beam_width == 0) {
        beam_width = ckpt.config.beam;
    }
    if (beam_width < 1) {
        throw ConfigError("beam width must be >= 1");
    }
    std::vector<std::string> lines = read_lines_or_throw(input_path);
    int sentence_index = 0;
    for (const std::string& line : lines) {
        std::vector<std::string> tokens = tokenize(line);
        if (tokens.empty()) {
            std::cout << '\n';
            ++sentence_index;
            continue;
        }
        std::vector<int> src_ids = ckpt.src_vocab.encode(tokens);
        int cap = max_len > 0 ? max_len
                              : Model::default_max_len(static_cast<int>(src_ids.size()));
        DecodeResult result = ckpt.model->beam(src_ids, beam_width, cap);
        std::vector<std::string> out = ckpt.tgt_vocab.decode(result.tokens);
        for (std::size_t i = 0; i < out.size(); ++i) {
            std::cout << (i > 0 ? " " : "") << out[i];
        }
        std::cout << '\n';

        if (!trace_prefix.empty()) {
            std::vector<StepTrace> trace = Model::trace_of(result);
            AttentionMatrix src_matrix, ctx_matrix;
            for (const StepTrace& step : trace) {
                std::string label = ckpt.tgt_vocab.token(step.token);
                src_matrix.row_labels.push_back(label);
                src_matrix.values.push_back(step.alpha);
                ctx_matrix.row_labels.push_back(label);
                ctx_matrix.values.push_back(step.alpha_ctx);
            }
            src_matrix.column_labels = tokens;
            for (int c = 0; c < ckpt.config.model.target_len; ++c) {
                ctx_matrix.column_labels.push_back("c" + std::to_string(c));
            }
            std::string base = trace_prefix + "." + std::to_string(sentence_index);
            std::ofstream src_out(base + ".src.tsv");
            std::ofstream ctx_out(base + ".ctx.tsv");
            if (!src_out || !ctx_out) {
                throw FormatError("cannot write attention trace files at " + base);
            }
            write_attention_tsv(src_matrix, src_out);
            write_attention_tsv(ctx_matrix, ctx_out);
        }
        ++sentence_index;
    }
    return kExitOk;
}

int cmd_eval(const std::string& hyp_path, const std::vector<std::string>& ref_paths,
             const std::string& src_path) {
    std::vector<std::string> hyp_lines = read_lines_or_throw(hyp_path);
    std::vector<Tokens> hyps;
    hyps.reserve(hyp_lines.size());
    for (const std::string& line : hyp_lines) {
        hyps.push_back(tokenize(line));
    }
    std::vector<std::vector<Tokens>> refs(hyps.size());
    for (const std::string& ref_path : ref_paths) {
        std::vector<std::string> ref_lines = read_lines_or_throw(ref_path);
        if (ref_lines.size() != hyps.size()) {
            throw FormatError("reference " + ref_path + " has " +
                              std::to_string(ref_lines.size()) + " lines, hypothesis has " +
                              std::to_string(hyps.size()));
        }
        for (std::size_t i = 0; i < ref_lines.size(); ++i) {
            refs[i].push_back(tokenize(ref_lines[i]));
        }
    }
    BleuReport report = bleu(hyps, refs);
    std::cout << "bleu=" << format_sig9(report.bleu) << '\n'
              << "bp=" << format_sig9(report.brevity_penalty) << '\n';
    for (int n = 0; n < 4; ++n) {
        std::cout << "prec" << (n + 1) << '='
                  << format_sig9(report.precisions[static_cast<std::size_t>(n)]) << '\n';
    }
    std::cout << "hyp_len=" << report.hyp_len << '\n'
              << "ref_len=" << report.ref_len << '\n';
    for (int n = 1; n <= 4; ++n) {
        std::cout << "dup" << n << '=' << format_sig9(duplicate_rate(hyps, n)) << '\n';
    }
    if (!src_path.empty()) {
        std::vector<std::string> src_lines = read_lines_or_throw(src_path);
        if (src_lines.size() != hyps.size()) {
            throw FormatError("source " + src_path + " has " +
                              std::to_string(src_lines.size()) + " lines, hypothesis has " +
                              std::to_string(hyps.size()));
        }
        std::vector<int> src_lengths;
        src_lengths.reserve(src_lines.size());
        for (const std::string& line : src_lines) {
            src_lengths.push_back(static_cast<int>(tokenize(line).size()));
        }
        auto buckets = bleu_by_length(hyps, refs, src_lengths,
                                      {10, 20, 30, 40, 50, 60});
        for (const auto& [threshold, bucket] : buckets) {
            std::cout << "bleu_len" << threshold << '=' << format_sig9(bucket.bleu)
                      << '\n';
        }
    }
    return kExitOk;
}

int cmd_gradcheck(int dim, int vocab, int target_len, double h, double tol,
                  std::uint64_t seed, bool break_grad) {
    testing::corrupt_tanh_backward = break_grad;
    ModelConfig config = tiny_model_config(dim, target_len);
    int vocab_size = vocab + 4;
    Model model(config, vocab_size, vocab_size, seed_override(seed));
    ParallelBatch batch = gradcheck_batch(vocab_size, vocab_size, seed_override(seed) + 1);
    std::vector<GroupGradCheck> results = model_gradcheck(model, batch, h, tol);
    testing::corrupt_tanh_backward = false;

    double worst = 0.0;
    bool failed = false;
    for (const GroupGradCheck& group : results) {
        std::cout << "group " << group.group << " coords "
                  << group.report.coords_checked << " max_rel_err "
                  << format_sig9(group.report.max_rel_err)
                  << (group.report.passed ? " ok" : " FAIL") << '\n';
        worst = std::max(worst, group.report.max_rel_err);
        failed = failed || !group.report.passed;
    }
    std::cout << "max_rel_err=" << format_sig9(worst) << '\n'
              << "tolerance=" << format_sig9(tol) << '\n'
              << "result=" << (failed ? "FAIL" : "PASS") << '\n';
    if (failed && break_grad) {
        std::cout << "break-grad hook active: tanh backward rule corrupted\n";
    }
    return failed ? kExitVerificationFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seq2Seq translation with a deconvolution-guided decoder"};
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
    std::string config_path;
    std::string synth_kind;
    int synth_pairs = 2000;
    int synth_vocab = 20;
    int synth_max_len = 10;
    bool no_deconv = false;
    train_cmd->add_option("--config", config_path, "run configuration file")->required();
    train_cmd->add_option("--synth", synth_kind,
                          "generate a synthetic corpus first (copy, reverse, toy-grammar)");
    train_cmd->add_option("--synth-pairs", synth_pairs, "synthetic training pairs");
    train_cmd->add_option("--synth-vocab", synth_vocab, "synthetic vocabulary size");
    train_cmd->add_option("--synth-max-len", synth_max_len, "synthetic max sentence length");
    train_cmd->add_flag("--no-deconv", no_deconv,
                        "baseline ablation: zero context matrix, auxiliary losses off");

    auto* translate_cmd = app.add_subcommand("translate", "translate a tokenized file");
    std::string checkpoint_path, input_path, trace_prefix;
    int beam_width = 0;
    int max_len = 0;
    translate_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    translate_cmd->add_option("--input", input_path, "input file, one sentence per line")->required();
    translate_cmd->add_option("--beam", beam_width, "beam width (default from checkpoint config)");
    translate_cmd->add_option("--max-len", max_len, "decode length cap (default 2*source+10)");
    translate_cmd->add_option("--trace", trace_prefix, "write attention TSVs with this prefix");

    auto* eval_cmd = app.add_subcommand("eval", "score hypotheses against references");
    std::string hyp_path, src_path;
    std::vector<std::string> ref_paths;
    eval_cmd->add_option("--hyp", hyp_path, "hypothesis file")->required();
    eval_cmd->add_option("--ref", ref_paths, "reference file(s)")->required();
    eval_cmd->add_option("--src", src_path, "source file for length-bucketed BLEU");

    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    int dim = 8, vocab = 12, target_len = 4;
    double h = 1e-5, tol = 1e-3;
    std::uint64_t seed = 7;
    bool break_grad = false;
    gradcheck_cmd->add_option("--dim", dim, "embedding and hidden width");
    gradcheck_cmd->add_option("--vocab", vocab, "real tokens per vocabulary");
    gradcheck_cmd->add_option("--target-len", target_len, "context matrix height");
    gradcheck_cmd->add_option("--h", h, "central-difference step");
    gradcheck_cmd->add_option("--tol", tol, "relative-error tolerance");
    gradcheck_cmd->add_option("--seed", seed, "parameter seed");
    gradcheck_cmd->add_flag("--break-grad", break_grad,
                            "negative control: corrupt one backward rule");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            return cmd_train(config_path, synth_kind, synth_pairs, synth_vocab,
                             synth_max_len, no_deconv);
        }
        if (*translate_cmd) {
            return cmd_translate(checkpoint_path, input_path, beam_width, max_len,
                                 trace_prefix);
        }
        if (*eval_cmd) {
            return cmd_eval(hyp_path, ref_paths, src_path);
        }
        if (*gradcheck_cmd) {
            return cmd_gradcheck(dim, vocab, target_len, h, tol, seed, break_grad);
        }
    } catch (const deconvdec::CheckpointError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckpointMismatch;
    } catch (const deconvdec::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitOk;
}
