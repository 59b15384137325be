#include "deconvdec/decoding.hpp"

#include <algorithm>
#include <cmath>

namespace deconvdec {

namespace {

bool is_banned(const std::vector<int>& banned, int token) {
    return std::find(banned.begin(), banned.end(), token) != banned.end();
}

struct Hypothesis {
    StepModel::NodePtr node;
    std::vector<int> tokens;
    double log_prob = 0.0;
};

DecodeResult finish(Hypothesis hyp, bool with_eos, double eos_log_prob) {
    DecodeResult result;
    result.tokens = std::move(hyp.tokens);
    result.ended_with_eos = with_eos;
    result.cumulative_log_prob = hyp.log_prob + (with_eos ? eos_log_prob : 0.0);
    result.scored_length =
        static_cast<int>(result.tokens.size()) + (with_eos ? 1 : 0);
    result.normalized_score =
        result.scored_length > 0
            ? result.cumulative_log_prob / result.scored_length
            : 0.0;
    result.leaf = hyp.node;
    return result;
}

}  // namespace

DecodeResult greedy_decode(StepModel& model, int max_len) {
    if (max_len < 1) {
        throw ConfigError("greedy_decode: max_len must be >= 1");
    }
    const std::vector<int>& banned = model.banned_tokens();
    Hypothesis hyp{model.root(), {}, 0.0};
    for (int step = 0; step < max_len; ++step) {
        const std::vector<double>& lp = model.log_probs(hyp.node);
        int best = -1;
        for (int t = 0; t < model.vocab_size(); ++t) {
            if (is_banned(banned, t)) {
                continue;
            }
            if (best < 0 || lp[static_cast<std::size_t>(t)] > lp[static_cast<std::size_t>(best)]) {
                best = t;
            }
        }
        if (best == model.eos_token()) {
            return finish(std::move(hyp), true, lp[static_cast<std::size_t>(best)]);
        }
        hyp.log_prob += lp[static_cast<std::size_t>(best)];
        hyp.node = model.append(hyp.node, best);
        hyp.tokens.push_back(best);
    }
    return finish(std::move(hyp), false, 0.0);
}

DecodeResult beam_decode(StepModel& model, int width, int max_len) {
    if (width < 1) {
        throw ConfigError("beam_decode: width must be >= 1");
    }
    if (max_len < 1) {
        throw ConfigError("beam_decode: max_len must be >= 1");
    }
    const std::vector<int>& banned = model.banned_tokens();
    const int eos = model.eos_token();

    std::vector<Hypothesis> beam;
    beam.push_back({model.root(), {}, 0.0});
    std::vector<DecodeResult> pool;

    struct Candidate {
        std::size_t hyp;
        int token;
        double log_prob;   // cumulative
        double step_lp;
    };

    for (int step = 0; step < max_len && !beam.empty(); ++step) {
        std::vector<Candidate> candidates;
        candidates.reserve(beam.size() * static_cast<std::size_t>(model.vocab_size()));
        for (std::size_t h = 0; h < beam.size(); ++h) {
            const std::vector<double>& lp = model.log_probs(beam[h].node);
            for (int t = 0; t < model.vocab_size(); ++t) {
                if (is_banned(banned, t)) {
                    continue;
                }
                candidates.push_back(
                    {h, t, beam[h].log_prob + lp[static_cast<std::size_t>(t)],
                     lp[static_cast<std::size_t>(t)]});
            }
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const Candidate& a, const Candidate& b) {
                      if (a.log_prob != b.log_prob) {
                          return a.log_prob > b.log_prob;
                      }
                      if (a.token != b.token) {
                          return a.token < b.token;
                      }
                      return a.hyp < b.hyp;
                  });
        std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(width),
                                                 candidates.size());
        std::vector<Hypothesis> next;
        next.reserve(keep);
        for (std::size_t c = 0; c < keep; ++c) {
            const Candidate& cand = candidates[c];
            const Hypothesis& parent = beam[cand.hyp];
            if (cand.token == eos) {
                pool.push_back(finish(Hypothesis{parent.node, parent.tokens,
                                                 parent.log_prob},
                                      true, cand.step_lp));
            } else {
                Hypothesis child;
                child.node = model.append(parent.node, cand.token);
                child.tokens = parent.tokens;
                child.tokens.push_back(cand.token);
                child.log_prob = cand.log_prob;
                next.push_back(std::move(child));
            }
        }
        beam = std::move(next);
    }
    // Hypotheses alive at the cap are finished without EOS.
    for (Hypothesis& hyp : beam) {
        pool.push_back(finish(std::move(hyp), false, 0.0));
    }
    if (pool.empty()) {
        throw DomainError("beam_decode: no hypothesis produced");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
        const DecodeResult& a = pool[i];
        const DecodeResult& b = pool[best];
        if (a.normalized_score != b.normalized_score) {
            if (a.normalized_score > b.normalized_score) {
                best = i;
            }
            continue;
        }
        if (a.scored_length != b.scored_length) {
            if (a.scored_length < b.scored_length) {
                best = i;
            }
            continue;
        }
        if (a.tokens < b.tokens) {
            best = i;
        }
    }
    return pool[static_cast<std::size_t>(best)];
}

}  // namespace deconvdec
