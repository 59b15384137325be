#include "deconvdec/config.hpp"

#include <fstream>
#include <sstream>

namespace deconvdec {

std::string format_deconv_layers(const std::vector<DeconvLayerSpec>& specs) {
    std::string out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(specs[i].kernel) + ':' + std::to_string(specs[i].stride) +
               ':' + std::to_string(specs[i].padding) + ':' +
               std::to_string(specs[i].filters);
    }
    return out;
}

std::vector<DeconvLayerSpec> parse_deconv_layers(const std::string& text) {
    std::vector<DeconvLayerSpec> specs;
    std::istringstream layers(text);
    std::string layer;
    while (std::getline(layers, layer, ',')) {
        std::istringstream fields(layer);
        std::string field;
        std::vector<int> values;
        while (std::getline(fields, field, ':')) {
            try {
                values.push_back(std::stoi(field));
            } catch (const std::exception&) {
                throw ConfigError("deconv.layers: bad integer '" + field + "' in '" +
                                  text + "'");
            }
        }
        if (values.size() != 4) {
            throw ConfigError("deconv.layers: each layer is k:s:p:f, got '" + layer + "'");
        }
        specs.push_back({values[0], values[1], values[2], values[3]});
    }
    if (specs.empty()) {
        throw ConfigError("deconv.layers: no layers in '" + text + "'");
    }
    return specs;
}

namespace {

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        int v = std::stoi(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "model.embed_dim") {
        model.embed_dim = parse_int(key, value);
    } else if (key == "model.hidden_dim") {
        model.hidden_dim = parse_int(key, value);
    } else if (key == "model.dropout") {
        model.dropout = parse_double(key, value);
    } else if (key == "deconv.enabled") {
        model.deconv_enabled = parse_bool(key, value);
    } else if (key == "deconv.target_len") {
        model.target_len = parse_int(key, value);
    } else if (key == "deconv.layers") {
        model.deconv_layers = parse_deconv_layers(value);
    } else if (key == "data.train_src") {
        train_src = value;
    } else if (key == "data.train_tgt") {
        train_tgt = value;
    } else if (key == "data.valid_src") {
        valid_src = value;
    } else if (key == "data.valid_tgt") {
        valid_tgt = value;
    } else if (key == "data.vocab_cap") {
        vocab_cap = parse_int(key, value);
    } else if (key == "data.max_len") {
        max_len = parse_int(key, value);
    } else if (key == "train.batch_size") {
        batch_size = parse_int(key, value);
    } else if (key == "train.lr") {
        lr = parse_double(key, value);
    } else if (key == "train.adam_beta1") {
        adam_beta1 = parse_double(key, value);
    } else if (key == "train.adam_beta2") {
        adam_beta2 = parse_double(key, value);
    } else if (key == "train.adam_eps") {
        adam_eps = parse_double(key, value);
    } else if (key == "train.clip_norm") {
        clip_norm = parse_double(key, value);
    } else if (key == "train.max_epochs") {
        max_epochs = parse_int(key, value);
    } else if (key == "train.patience") {
        patience = parse_int(key, value);
    } else if (key == "train.target_bleu") {
        target_bleu = parse_double(key, value);
    } else if (key == "train.seed") {
        seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "decode.beam") {
        beam = parse_int(key, value);
    } else if (key == "out.dir") {
        out_dir = value;
    } else if (key == "precision") {
        if (value != "f64") {
            throw ConfigError("precision: this build computes in f64 only, got '" +
                              value + "'");
        }
        precision = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

RunConfig RunConfig::parse_lines(const std::vector<std::string>& lines) {
    RunConfig config;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(i + 1) +
                              ": expected key=value, got '" + line + "'");
        }
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    config.validate();
    return config;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return parse_lines(lines);
}

void RunConfig::validate() const {
    model.validate();
    if (vocab_cap < 1) {
        throw ConfigError("data.vocab_cap must be >= 1");
    }
    if (max_len < 1) {
        throw ConfigError("data.max_len must be >= 1");
    }
    if (batch_size < 1) {
        throw ConfigError("train.batch_size must be >= 1");
    }
    if (lr <= 0.0) {
        throw ConfigError("train.lr must be positive");
    }
    if (clip_norm <= 0.0) {
        throw ConfigError("train.clip_norm must be positive");
    }
    if (max_epochs < 1) {
        throw ConfigError("train.max_epochs must be >= 1");
    }
    if (patience < 1) {
        throw ConfigError("train.patience must be >= 1");
    }
    if (beam < 1) {
        throw ConfigError("decode.beam must be >= 1");
    }
}

std::vector<std::string> RunConfig::to_lines() const {
    std::vector<std::string> lines;
    lines.push_back("model.embed_dim=" + std::to_string(model.embed_dim));
    lines.push_back("model.hidden_dim=" + std::to_string(model.hidden_dim));
    lines.push_back("model.dropout=" + format_double(model.dropout));
    lines.push_back(std::string("deconv.enabled=") +
                    (model.deconv_enabled ? "true" : "false"));
    lines.push_back("deconv.target_len=" + std::to_string(model.target_len));
    lines.push_back("deconv.layers=" + format_deconv_layers(model.deconv_layers));
    lines.push_back("data.train_src=" + train_src);
    lines.push_back("data.train_tgt=" + train_tgt);
    lines.push_back("data.valid_src=" + valid_src);
    lines.push_back("data.valid_tgt=" + valid_tgt);
    lines.push_back("data.vocab_cap=" + std::to_string(vocab_cap));
    lines.push_back("data.max_len=" + std::to_string(max_len));
    lines.push_back("train.batch_size=" + std::to_string(batch_size));
    lines.push_back("train.lr=" + format_double(lr));
    lines.push_back("train.adam_beta1=" + format_double(adam_beta1));
    lines.push_back("train.adam_beta2=" + format_double(adam_beta2));
    lines.push_back("train.adam_eps=" + format_double(adam_eps));
    lines.push_back("train.clip_norm=" + format_double(clip_norm));
    lines.push_back("train.max_epochs=" + std::to_string(max_epochs));
    lines.push_back("train.patience=" + std::to_string(patience));
    lines.push_back("train.target_bleu=" + format_double(target_bleu));
    lines.push_back("train.seed=" + std::to_string(seed));
    lines.push_back("decode.beam=" + std::to_string(beam));
    lines.push_back("out.dir=" + out_dir);
    lines.push_back("precision=" + precision);
    return lines;
}

}  // namespace deconvdec
