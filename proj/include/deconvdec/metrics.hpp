#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "deconvdec/error.hpp"

namespace deconvdec {

using Tokens = std::vector<std::string>;

struct BleuReport {
    double bleu = 0.0;  // 0..100
    std::array<double, 4> precisions{0.0, 0.0, 0.0, 0.0};
    double brevity_penalty = 1.0;
    long hyp_len = 0;
    long ref_len = 0;
};

/// Corpus-level BLEU-4: clipped n-gram counts against the closest reference,
/// geometric mean of precisions, brevity penalty exp(1 - r/h) when h < r.
/// Any zero precision yields BLEU 0 (no smoothing).
BleuReport bleu(const std::vector<Tokens>& hyps,
                const std::vector<std::vector<Tokens>>& refs);

/// Mean over sentences of (grams - distinct) / grams for order n; sentences
/// with no n-grams contribute 0.
double duplicate_rate(const std::vector<Tokens>& sentences, int n);

/// Corpus BLEU restricted to pairs with source length >= threshold; empty
/// buckets are absent from the map.
std::map<int, BleuReport> bleu_by_length(const std::vector<Tokens>& hyps,
                                         const std::vector<std::vector<Tokens>>& refs,
                                         const std::vector<int>& src_lengths,
                                         const std::vector<int>& thresholds);

/// One attention matrix of a decode trace: rows = output tokens, columns =
/// attended positions. Serialized as TSV with row and column headers and
/// 9-significant-digit values.
struct AttentionMatrix {
    std::vector<std::string> row_labels;
    std::vector<std::string> column_labels;
    std::vector<std::vector<double>> values;
};

void write_attention_tsv(const AttentionMatrix& matrix, std::ostream& out);
AttentionMatrix read_attention_tsv(std::istream& in);
std::string format_sig9(double v);

}  // namespace deconvdec
