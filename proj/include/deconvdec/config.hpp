#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deconvdec/model.hpp"

namespace deconvdec {

/// Full run configuration. On disk this is flat `key=value` text with dotted
/// keys, `#` comments and blank lines allowed. Unknown keys are rejected.
struct RunConfig {
    ModelConfig model;

    std::string train_src;
    std::string train_tgt;
    std::string valid_src;
    std::string valid_tgt;
    int vocab_cap = 1000;
    int max_len = 50;

    int batch_size = 16;
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.98;
    double adam_eps = 1e-9;
    double clip_norm = 10.0;
    int max_epochs = 30;
    int patience = 5;
    double target_bleu = 0.0;  // stop early once validation BLEU reaches this; 0 = off
    std::uint64_t seed = 42;

    int beam = 10;
    std::string out_dir = "run";
    std::string precision = "f64";

    void validate() const;

    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_lines(const std::vector<std::string>& lines);
    /// Applies one `key=value` assignment; ConfigError on unknown keys.
    void set(const std::string& key, const std::string& value);
    /// Round-trippable serialization (every field, one key per line).
    std::vector<std::string> to_lines() const;
};

std::string format_deconv_layers(const std::vector<DeconvLayerSpec>& specs);
std::vector<DeconvLayerSpec> parse_deconv_layers(const std::string& text);

}  // namespace deconvdec
