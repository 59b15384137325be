#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "deconvdec/error.hpp"

namespace deconvdec {

std::vector<std::string> tokenize(const std::string& line);

/// Token/id bijection with four reserved ids: PAD=0, UNK=1, BOS=2, EOS=3.
class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;

    Vocabulary();

    /// Top-cap tokens by frequency, ties broken by first occurrence.
    static Vocabulary build(const std::vector<std::string>& lines, int cap);
    /// Rebuild from a saved token list (reserved tokens excluded).
    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

    int id(const std::string& token) const;  // UNK when absent
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()); }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<int>& ids) const;

    /// Tokens beyond the reserved four, in id order (the on-disk format:
    /// one token per line, line number = id - 4).
    std::vector<std::string> stored_tokens() const;
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    void append(const std::string& token);
};

struct SentencePair {
    std::vector<std::string> src;
    std::vector<std::string> tgt;
};

/// Aligned line-by-line corpus; pairs with either side longer than max_len
/// tokens are filtered, empty-sided pairs dropped with a warning on stderr.
std::vector<SentencePair> load_parallel(const std::string& src_path,
                                        const std::string& tgt_path,
                                        int max_len = 50);

struct ParallelBatch {
    std::vector<std::vector<int>> src;       // [B x n_max], PAD-filled
    std::vector<std::vector<int>> tgt;       // [B x (m_max + 2)], BOS ... EOS PAD*
    std::vector<std::vector<char>> src_mask; // true at real tokens
    std::vector<std::vector<char>> tgt_mask; // true at real tokens + BOS/EOS
    std::vector<int> src_len;                // real source token counts
    std::vector<int> tgt_len;                // real target token counts (no BOS/EOS)
    int size() const { return static_cast<int>(src.size()); }
};

/// Seeded shuffle, length-bucketed grouping, BOS/EOS framing and PAD fill.
std::vector<ParallelBatch> make_batches(const std::vector<SentencePair>& pairs,
                                        const Vocabulary& src_vocab,
                                        const Vocabulary& tgt_vocab,
                                        int batch_size, std::uint64_t seed);

enum class SynthKind { Copy, Reverse, ToyGrammar };
SynthKind parse_synth_kind(const std::string& name);

/// Writes an aligned synthetic corpus. Copy/Reverse draw token sequences
/// over w0..w{vocab_size-1}; ToyGrammar emits clause chains with the fixed
/// rewrite documented in docs/toy_grammar.md (vocab_size is ignored there).
void synth_task(SynthKind kind, int vocab_size, int n_pairs, int max_len,
                std::uint64_t seed, const std::string& src_path,
                const std::string& tgt_path);

}  // namespace deconvdec
