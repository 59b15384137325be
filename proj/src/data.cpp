#include "deconvdec/data.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace deconvdec {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
        tokens.push_back(tok);
    }
    return tokens;
}

Vocabulary::Vocabulary() {
    append("<pad>");
    append("<unk>");
    append("<bos>");
    append("<eos>");
}

void Vocabulary::append(const std::string& token) {
    ids_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& lines, int cap) {
    struct Entry {
        long count = 0;
        long first = 0;
    };
    std::unordered_map<std::string, Entry> counts;
    std::vector<std::string> order;
    long position = 0;
    for (const std::string& line : lines) {
        for (const std::string& tok : tokenize(line)) {
            auto [it, inserted] = counts.try_emplace(tok, Entry{0, position});
            if (inserted) {
                order.push_back(tok);
            }
            ++it->second.count;
            ++position;
        }
    }
    if (order.empty()) {
        throw DomainError("build_vocab: corpus contains no tokens");
    }
    std::sort(order.begin(), order.end(),
              [&counts](const std::string& a, const std::string& b) {
                  const Entry& ea = counts.at(a);
                  const Entry& eb = counts.at(b);
                  if (ea.count != eb.count) {
                      return ea.count > eb.count;
                  }
                  return ea.first < eb.first;
              });
    Vocabulary vocab;
    int kept = std::min<int>(cap, static_cast<int>(order.size()));
    for (int i = 0; i < kept; ++i) {
        vocab.append(order[static_cast<std::size_t>(i)]);
    }
    return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary vocab;
    for (const std::string& tok : tokens) {
        vocab.append(tok);
    }
    return vocab;
}

int Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) {
        throw IndexError("vocabulary id " + std::to_string(id) + " out of range [0, " +
                         std::to_string(size()) + ")");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& tok : tokens) {
        ids.push_back(id(tok));
    }
    return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (int i : ids) {
        tokens.push_back(token(i));
    }
    return tokens;
}

std::vector<std::string> Vocabulary::stored_tokens() const {
    return {tokens_.begin() + 4, tokens_.end()};
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write vocabulary to " + path);
    }
    for (const std::string& tok : stored_tokens()) {
        out << tok << '\n';
    }
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot read vocabulary from " + path);
    }
    Vocabulary vocab;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            vocab.append(line);
        }
    }
    return vocab;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
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

}  // namespace

std::vector<SentencePair> load_parallel(const std::string& src_path,
                                        const std::string& tgt_path, int max_len) {
    std::vector<std::string> src_lines = read_lines(src_path);
    std::vector<std::string> tgt_lines = read_lines(tgt_path);
    if (src_lines.size() != tgt_lines.size()) {
        std::size_t shorter = std::min(src_lines.size(), tgt_lines.size());
        throw FormatError("parallel files disagree: " + src_path + " has " +
                          std::to_string(src_lines.size()) + " lines, " + tgt_path +
                          " has " + std::to_string(tgt_lines.size()) +
                          " (first unmatched line " + std::to_string(shorter + 1) + ")");
    }
    std::vector<SentencePair> pairs;
    for (std::size_t i = 0; i < src_lines.size(); ++i) {
        SentencePair pair{tokenize(src_lines[i]), tokenize(tgt_lines[i])};
        if (pair.src.empty() || pair.tgt.empty()) {
            std::cerr << "warning: dropping empty pair at line " << (i + 1) << "\n";
            continue;
        }
        if (static_cast<int>(pair.src.size()) > max_len ||
            static_cast<int>(pair.tgt.size()) > max_len) {
            continue;
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<ParallelBatch> make_batches(const std::vector<SentencePair>& pairs,
                                        const Vocabulary& src_vocab,
                                        const Vocabulary& tgt_vocab,
                                        int batch_size, std::uint64_t seed) {
    if (pairs.empty()) {
        throw DomainError("make_batches: no sentence pairs");
    }
    if (batch_size < 1) {
        throw ConfigError("make_batches: batch size must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> index(pairs.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        index[i] = i;
    }
    std::shuffle(index.begin(), index.end(), rng);
    // Length bucketing: stable sort by source length keeps the shuffle as the
    // tie-break, so batches group similar lengths without being deterministic
    // in composition across epochs.
    std::stable_sort(index.begin(), index.end(),
                     [&pairs](std::size_t a, std::size_t b) {
                         return pairs[a].src.size() < pairs[b].src.size();
                     });
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t start = 0; start < index.size();
         start += static_cast<std::size_t>(batch_size)) {
        std::size_t end = std::min(index.size(), start + static_cast<std::size_t>(batch_size));
        groups.emplace_back(index.begin() + static_cast<std::ptrdiff_t>(start),
                            index.begin() + static_cast<std::ptrdiff_t>(end));
    }
    std::shuffle(groups.begin(), groups.end(), rng);

    std::vector<ParallelBatch> batches;
    batches.reserve(groups.size());
    for (const std::vector<std::size_t>& group : groups) {
        ParallelBatch batch;
        std::size_t n_max = 0, m_max = 0;
        for (std::size_t i : group) {
            n_max = std::max(n_max, pairs[i].src.size());
            m_max = std::max(m_max, pairs[i].tgt.size());
        }
        for (std::size_t i : group) {
            std::vector<int> src = src_vocab.encode(pairs[i].src);
            std::vector<int> tgt = tgt_vocab.encode(pairs[i].tgt);
            batch.src_len.push_back(static_cast<int>(src.size()));
            batch.tgt_len.push_back(static_cast<int>(tgt.size()));

            std::vector<char> src_mask(n_max, 0);
            std::fill(src_mask.begin(), src_mask.begin() + static_cast<std::ptrdiff_t>(src.size()), 1);
            src.resize(n_max, Vocabulary::kPad);

            std::vector<int> framed;
            framed.reserve(m_max + 2);
            framed.push_back(Vocabulary::kBos);
            framed.insert(framed.end(), tgt.begin(), tgt.end());
            framed.push_back(Vocabulary::kEos);
            std::vector<char> tgt_mask(m_max + 2, 0);
            std::fill(tgt_mask.begin(), tgt_mask.begin() + static_cast<std::ptrdiff_t>(framed.size()), 1);
            framed.resize(m_max + 2, Vocabulary::kPad);

            batch.src.push_back(std::move(src));
            batch.src_mask.push_back(std::move(src_mask));
            batch.tgt.push_back(std::move(framed));
            batch.tgt_mask.push_back(std::move(tgt_mask));
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "copy") {
        return SynthKind::Copy;
    }
    if (name == "reverse") {
        return SynthKind::Reverse;
    }
    if (name == "toy-grammar") {
        return SynthKind::ToyGrammar;
    }
    throw ConfigError("unknown synthetic task '" + name +
                      "' (expected copy, reverse or toy-grammar)");
}

namespace {

void write_corpus(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write corpus to " + path);
    }
    for (const std::string& line : lines) {
        out << line << '\n';
    }
}

std::string join(const std::vector<std::string>& tokens) {
    std::string line;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            line += ' ';
        }
        line += tokens[i];
    }
    return line;
}

}  // namespace

void synth_task(SynthKind kind, int vocab_size, int n_pairs, int max_len,
                std::uint64_t seed, const std::string& src_path,
                const std::string& tgt_path) {
    if (vocab_size < 5) {
        throw ConfigError("synth_task: vocab_size must be >= 5");
    }
    if (n_pairs < 1 || max_len < 1) {
        throw ConfigError("synth_task: n_pairs and max_len must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::string> src_lines, tgt_lines;
    src_lines.reserve(static_cast<std::size_t>(n_pairs));
    tgt_lines.reserve(static_cast<std::size_t>(n_pairs));

    if (kind == SynthKind::Copy || kind == SynthKind::Reverse) {
        std::uniform_int_distribution<int> len_dist(1, max_len);
        std::uniform_int_distribution<int> tok_dist(0, vocab_size - 1);
        for (int p = 0; p < n_pairs; ++p) {
            int len = len_dist(rng);
            std::vector<std::string> tokens(static_cast<std::size_t>(len));
            for (std::string& tok : tokens) {
                tok = "w" + std::to_string(tok_dist(rng));
            }
            src_lines.push_back(join(tokens));
            if (kind == SynthKind::Reverse) {
                std::reverse(tokens.begin(), tokens.end());
            }
            tgt_lines.push_back(join(tokens));
        }
    } else {
        // Clause grammar with a deterministic rewrite; objects are doubled on
        // the target side so references carry legitimate repeated n-grams.
        // Full mapping in docs/toy_grammar.md.
        int max_clauses = std::min(3, (max_len + 1) / 4);
        max_clauses = std::max(1, max_clauses);
        std::uniform_int_distribution<int> clause_dist(1, max_clauses);
        std::uniform_int_distribution<int> word_dist(0, 5);
        for (int p = 0; p < n_pairs; ++p) {
            int clauses = clause_dist(rng);
            std::vector<std::string> src, tgt;
            for (int c = 0; c < clauses; ++c) {
                if (c > 0) {
                    src.push_back("and");
                    tgt.push_back("AND");
                }
                std::string s = std::to_string(word_dist(rng));
                std::string v = std::to_string(word_dist(rng));
                std::string o = std::to_string(word_dist(rng));
                src.push_back("s" + s);
                src.push_back("v" + v);
                src.push_back("o" + o);
                tgt.push_back("S" + s);
                tgt.push_back("V" + v);
                tgt.push_back("O" + o);
                tgt.push_back("O" + o);
            }
            src_lines.push_back(join(src));
            tgt_lines.push_back(join(tgt));
        }
    }
    write_corpus(src_path, src_lines);
    write_corpus(tgt_path, tgt_lines);
}

}  // namespace deconvdec
