#include "deconvdec/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "deconvdec/checkpoint.hpp"
#include "deconvdec/optimizer.hpp"

namespace deconvdec {

namespace {

std::string metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

double validation_bleu(const Model& model, const Vocabulary& src_vocab,
                       const Vocabulary& tgt_vocab,
                       const std::vector<SentencePair>& pairs) {
    std::vector<Tokens> hyps;
    std::vector<std::vector<Tokens>> refs;
    hyps.reserve(pairs.size());
    refs.reserve(pairs.size());
    for (const SentencePair& pair : pairs) {
        DecodeResult result = model.greedy(src_vocab.encode(pair.src));
        hyps.push_back(tgt_vocab.decode(result.tokens));
        refs.push_back({pair.tgt});
    }
    return bleu(hyps, refs).bleu;
}

TrainResult train(const RunConfig& config, std::ostream& info) {
    config.validate();
    if (config.train_src.empty() || config.train_tgt.empty()) {
        throw ConfigError("data.train_src and data.train_tgt must be set");
    }
    if (config.valid_src.empty() || config.valid_tgt.empty()) {
        throw ConfigError("data.valid_src and data.valid_tgt must be set");
    }
    std::vector<SentencePair> train_pairs =
        load_parallel(config.train_src, config.train_tgt, config.max_len);
    std::vector<SentencePair> valid_pairs =
        load_parallel(config.valid_src, config.valid_tgt, config.max_len);
    if (train_pairs.empty()) {
        throw DomainError("training corpus is empty after filtering");
    }
    if (valid_pairs.empty()) {
        throw DomainError("validation corpus is empty after filtering");
    }

    std::vector<std::string> src_lines, tgt_lines;
    src_lines.reserve(train_pairs.size());
    tgt_lines.reserve(train_pairs.size());
    for (const SentencePair& pair : train_pairs) {
        std::string src, tgt;
        for (const std::string& tok : pair.src) {
            src += tok + ' ';
        }
        for (const std::string& tok : pair.tgt) {
            tgt += tok + ' ';
        }
        src_lines.push_back(std::move(src));
        tgt_lines.push_back(std::move(tgt));
    }
    Vocabulary src_vocab = Vocabulary::build(src_lines, config.vocab_cap);
    Vocabulary tgt_vocab = Vocabulary::build(tgt_lines, config.vocab_cap);

    Model model(config.model, src_vocab.size(), tgt_vocab.size(), config.seed);
    AdamConfig adam_config{config.lr, config.adam_beta1, config.adam_beta2,
                           config.adam_eps};
    Adam optimizer(model.parameters(), adam_config);

    std::filesystem::create_directories(config.out_dir);
    TrainResult result;
    result.metrics_log = config.out_dir + "/metrics.tsv";
    result.best_checkpoint = config.out_dir + "/best.ckpt";
    result.final_checkpoint = config.out_dir + "/final.ckpt";
    std::ofstream metrics(result.metrics_log);
    if (!metrics) {
        throw ConfigError("cannot write metrics log " + result.metrics_log);
    }

    std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
    long step = 0;
    int epochs_without_improvement = 0;
    bool stop = false;

    for (int epoch = 1; epoch <= config.max_epochs && !stop; ++epoch) {
        std::vector<ParallelBatch> batches =
            make_batches(train_pairs, src_vocab, tgt_vocab, config.batch_size,
                         config.seed + static_cast<std::uint64_t>(epoch));
        for (std::size_t b = 0; b < batches.size(); ++b) {
            Tape tape;
            LossBreakdown loss = model.loss(batches[b], true, &dropout_rng);
            if (!std::isfinite(loss.total)) {
                throw TrainingError("non-finite loss at step " + std::to_string(step + 1) +
                                    " (epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(b) + ")");
            }
            tape.backward(loss.total_tensor);
            double grad_norm = clip_gradients(model.parameters(), config.clip_norm);
            optimizer.step();
            ++step;
            metrics << step << '\t' << metric(loss.nll) << '\t'
                    << metric(loss.smooth_l1) << '\t' << metric(loss.deconv_ce)
                    << '\t' << metric(loss.total) << '\t' << metric(grad_norm)
                    << '\n';
        }
        metrics.flush();

        double val_bleu = validation_bleu(model, src_vocab, tgt_vocab, valid_pairs);
        result.history.emplace_back(epoch, val_bleu);
        info << "epoch " << epoch << " steps " << step << " validation_bleu "
             << metric(val_bleu) << '\n';

        if (val_bleu > result.best_bleu) {
            result.best_bleu = val_bleu;
            result.best_epoch = epoch;
            epochs_without_improvement = 0;
            save_checkpoint(result.best_checkpoint, model, config, src_vocab,
                            tgt_vocab, &optimizer, step, epoch, result.history);
        } else {
            ++epochs_without_improvement;
            if (epochs_without_improvement >= config.patience) {
                info << "early stop: no improvement for " << config.patience
                     << " epochs\n";
                stop = true;
            }
        }
        if (config.target_bleu > 0.0 && val_bleu >= config.target_bleu) {
            info << "early stop: reached target BLEU " << metric(config.target_bleu)
                 << '\n';
            stop = true;
        }
    }
    result.steps = step;
    save_checkpoint(result.final_checkpoint, model, config, src_vocab, tgt_vocab,
                    &optimizer, step,
                    result.history.empty() ? 0 : result.history.back().first,
                    result.history);
    return result;
}

}  // namespace deconvdec
