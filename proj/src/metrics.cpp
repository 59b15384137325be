#include "deconvdec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace deconvdec {

namespace {

// n-gram -> count, with tokens joined by a separator that cannot appear
// inside whitespace-split tokens.
std::unordered_map<std::string, long> ngram_counts(const Tokens& tokens, int n) {
    std::unordered_map<std::string, long> counts;
    if (static_cast<int>(tokens.size()) < n) {
        return counts;
    }
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j > 0) {
                key += '\x1f';
            }
            key += tokens[i + static_cast<std::size_t>(j)];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

BleuReport bleu(const std::vector<Tokens>& hyps,
                const std::vector<std::vector<Tokens>>& refs) {
    if (hyps.size() != refs.size()) {
        throw FormatError("bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                          std::to_string(refs.size()) + " reference sets");
    }
    std::array<long, 4> correct{0, 0, 0, 0};
    std::array<long, 4> total{0, 0, 0, 0};
    long hyp_len = 0, ref_len = 0;
    for (std::size_t s = 0; s < hyps.size(); ++s) {
        const Tokens& hyp = hyps[s];
        if (refs[s].empty()) {
            throw FormatError("bleu: sentence " + std::to_string(s) +
                              " has no references");
        }
        hyp_len += static_cast<long>(hyp.size());
        // Closest reference length; ties go to the shorter reference.
        long best_ref = static_cast<long>(refs[s].front().size());
        for (const Tokens& ref : refs[s]) {
            long len = static_cast<long>(ref.size());
            long d_new = std::labs(len - static_cast<long>(hyp.size()));
            long d_old = std::labs(best_ref - static_cast<long>(hyp.size()));
            if (d_new < d_old || (d_new == d_old && len < best_ref)) {
                best_ref = len;
            }
        }
        ref_len += best_ref;
        for (int n = 1; n <= 4; ++n) {
            auto hyp_counts = ngram_counts(hyp, n);
            std::unordered_map<std::string, long> max_ref;
            for (const Tokens& ref : refs[s]) {
                for (const auto& [gram, count] : ngram_counts(ref, n)) {
                    long& best = max_ref[gram];
                    best = std::max(best, count);
                }
            }
            for (const auto& [gram, count] : hyp_counts) {
                total[static_cast<std::size_t>(n - 1)] += count;
                auto it = max_ref.find(gram);
                if (it != max_ref.end()) {
                    correct[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
                }
            }
        }
    }
    BleuReport report;
    report.hyp_len = hyp_len;
    report.ref_len = ref_len;
    double log_sum = 0.0;
    bool zero = false;
    for (int n = 0; n < 4; ++n) {
        double p = total[static_cast<std::size_t>(n)] > 0
                       ? static_cast<double>(correct[static_cast<std::size_t>(n)]) /
                             static_cast<double>(total[static_cast<std::size_t>(n)])
                       : 0.0;
        report.precisions[static_cast<std::size_t>(n)] = p;
        if (p <= 0.0) {
            zero = true;
        } else {
            log_sum += std::log(p);
        }
    }
    report.brevity_penalty =
        (hyp_len > 0 && hyp_len < ref_len)
            ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
            : 1.0;
    report.bleu = (zero || hyp_len == 0)
                      ? 0.0
                      : 100.0 * report.brevity_penalty * std::exp(log_sum / 4.0);
    return report;
}

double duplicate_rate(const std::vector<Tokens>& sentences, int n) {
    if (n < 1) {
        throw DomainError("duplicate_rate: n must be >= 1");
    }
    if (sentences.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const Tokens& sentence : sentences) {
        long grams = static_cast<long>(sentence.size()) - n + 1;
        if (grams <= 0) {
            continue;  // contributes 0
        }
        auto counts = ngram_counts(sentence, n);
        long distinct = static_cast<long>(counts.size());
        sum += static_cast<double>(grams - distinct) / static_cast<double>(grams);
    }
    return sum / static_cast<double>(sentences.size());
}

std::map<int, BleuReport> bleu_by_length(const std::vector<Tokens>& hyps,
                                         const std::vector<std::vector<Tokens>>& refs,
                                         const std::vector<int>& src_lengths,
                                         const std::vector<int>& thresholds) {
    if (hyps.size() != refs.size() || hyps.size() != src_lengths.size()) {
        throw FormatError("bleu_by_length: misaligned inputs");
    }
    std::map<int, BleuReport> result;
    for (int threshold : thresholds) {
        std::vector<Tokens> sub_hyps;
        std::vector<std::vector<Tokens>> sub_refs;
        for (std::size_t i = 0; i < hyps.size(); ++i) {
            if (src_lengths[i] >= threshold) {
                sub_hyps.push_back(hyps[i]);
                sub_refs.push_back(refs[i]);
            }
        }
        if (sub_hyps.empty()) {
            continue;  // absent, not zero
        }
        result.emplace(threshold, bleu(sub_hyps, sub_refs));
    }
    return result;
}

std::string format_sig9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_attention_tsv(const AttentionMatrix& matrix, std::ostream& out) {
    out << "token";
    for (const std::string& label : matrix.column_labels) {
        out << '\t' << label;
    }
    out << '\n';
    for (std::size_t r = 0; r < matrix.values.size(); ++r) {
        out << matrix.row_labels[r];
        for (double v : matrix.values[r]) {
            out << '\t' << format_sig9(v);
        }
        out << '\n';
    }
}

AttentionMatrix read_attention_tsv(std::istream& in) {
    AttentionMatrix matrix;
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("attention TSV: missing header");
    }
    {
        std::istringstream header(line);
        std::string cell;
        bool first = true;
        while (std::getline(header, cell, '\t')) {
            if (first) {
                first = false;
            } else {
                matrix.column_labels.push_back(cell);
            }
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, '\t');
        matrix.row_labels.push_back(cell);
        std::vector<double> values;
        while (std::getline(row, cell, '\t')) {
            values.push_back(std::stod(cell));
        }
        if (values.size() != matrix.column_labels.size()) {
            throw FormatError("attention TSV: row " + std::to_string(matrix.values.size()) +
                              " has " + std::to_string(values.size()) + " cells, expected " +
                              std::to_string(matrix.column_labels.size()));
        }
        matrix.values.push_back(std::move(values));
    }
    return matrix;
}

}  // namespace deconvdec
