#include "deconvdec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace deconvdec {

namespace {

constexpr const char* kMagic = "DECONVDEC-CKPT 1";

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    // Payload is little-endian float64; this writer targets little-endian hosts.
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::vector<double>& values) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) {
        throw CheckpointError("checkpoint payload truncated");
    }
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw CheckpointError(std::string("checkpoint header truncated at ") + what);
    }
    return line;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const RunConfig& config, const Vocabulary& src_vocab,
                     const Vocabulary& tgt_vocab, const Adam* optimizer,
                     long step, int epoch,
                     const std::vector<std::pair<int, double>>& validation_history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CheckpointError("cannot write checkpoint to " + path);
    }
    out << kMagic << '\n';

    std::vector<std::string> config_lines = config.to_lines();
    out << "config " << config_lines.size() << '\n';
    for (const std::string& line : config_lines) {
        out << line << '\n';
    }

    std::vector<std::string> src_tokens = src_vocab.stored_tokens();
    out << "src_vocab " << src_tokens.size() << '\n';
    for (const std::string& tok : src_tokens) {
        out << tok << '\n';
    }
    std::vector<std::string> tgt_tokens = tgt_vocab.stored_tokens();
    out << "tgt_vocab " << tgt_tokens.size() << '\n';
    for (const std::string& tok : tgt_tokens) {
        out << tok << '\n';
    }

    out << "history " << validation_history.size() << '\n';
    for (const auto& [ep, bleu] : validation_history) {
        out << ep << ' ' << format_double(bleu) << '\n';
    }
    out << "counters " << step << ' ' << epoch << '\n';

    const auto& params = model.named_parameters();
    out << "tensors " << params.size() << '\n';
    for (const auto& [name, tensor] : params) {
        out << name << ' ' << tensor->ndim();
        for (int extent : tensor->shape) {
            out << ' ' << extent;
        }
        out << '\n';
    }
    out << "optimizer " << (optimizer != nullptr ? 1 : 0);
    if (optimizer != nullptr) {
        out << ' ' << optimizer->step_count();
    }
    out << '\n';
    out << "binary\n";

    for (const auto& [name, tensor] : params) {
        write_doubles(out, tensor->data);
    }
    if (optimizer != nullptr) {
        for (const std::vector<double>& m : optimizer->first_moments()) {
            write_doubles(out, m);
        }
        for (const std::vector<double>& v : optimizer->second_moments()) {
            write_doubles(out, v);
        }
    }
    if (!out) {
        throw CheckpointError("write failure while saving " + path);
    }
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint " + path);
    }
    if (next_line(in, "magic") != kMagic) {
        throw CheckpointError(path + " is not a version-1 checkpoint");
    }

    CheckpointData data;
    std::string word;
    std::size_t count = 0;

    auto expect_section = [&](const char* name) -> std::size_t {
        std::istringstream header(next_line(in, name));
        std::string key;
        std::size_t n = 0;
        if (!(header >> key >> n) || key != name) {
            throw CheckpointError(std::string("checkpoint: expected section ") + name);
        }
        return n;
    };

    count = expect_section("config");
    std::vector<std::string> config_lines;
    config_lines.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        config_lines.push_back(next_line(in, "config"));
    }
    data.config = RunConfig::parse_lines(config_lines);

    count = expect_section("src_vocab");
    std::vector<std::string> src_tokens;
    src_tokens.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        src_tokens.push_back(next_line(in, "src_vocab"));
    }
    data.src_vocab = Vocabulary::from_tokens(src_tokens);

    count = expect_section("tgt_vocab");
    std::vector<std::string> tgt_tokens;
    tgt_tokens.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        tgt_tokens.push_back(next_line(in, "tgt_vocab"));
    }
    data.tgt_vocab = Vocabulary::from_tokens(tgt_tokens);

    count = expect_section("history");
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream row(next_line(in, "history"));
        int ep = 0;
        double bleu = 0.0;
        if (!(row >> ep >> bleu)) {
            throw CheckpointError("checkpoint: malformed history row");
        }
        data.validation_history.emplace_back(ep, bleu);
    }

    {
        std::istringstream counters(next_line(in, "counters"));
        if (!(counters >> word >> data.step >> data.epoch) || word != "counters") {
            throw CheckpointError("checkpoint: malformed counters line");
        }
    }

    count = expect_section("tensors");
    struct TensorHeader {
        std::string name;
        std::vector<int> shape;
    };
    std::vector<TensorHeader> headers;
    headers.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream row(next_line(in, "tensors"));
        TensorHeader header;
        int ndim = 0;
        if (!(row >> header.name >> ndim) || ndim < 1) {
            throw CheckpointError("checkpoint: malformed tensor header");
        }
        header.shape.resize(static_cast<std::size_t>(ndim));
        for (int& extent : header.shape) {
            if (!(row >> extent)) {
                throw CheckpointError("checkpoint: malformed tensor shape for " +
                                      header.name);
            }
        }
        headers.push_back(std::move(header));
    }

    {
        std::istringstream optline(next_line(in, "optimizer"));
        int flag = 0;
        if (!(optline >> word >> flag) || word != "optimizer") {
            throw CheckpointError("checkpoint: malformed optimizer line");
        }
        data.has_optimizer = flag != 0;
        if (data.has_optimizer && !(optline >> data.optimizer_step_count)) {
            throw CheckpointError("checkpoint: optimizer step count missing");
        }
    }
    if (next_line(in, "binary") != "binary") {
        throw CheckpointError("checkpoint: missing binary marker");
    }

    data.model = std::make_unique<Model>(data.config.model,
                                         data.src_vocab.size(),
                                         data.tgt_vocab.size(), data.config.seed);
    const auto& params = data.model->named_parameters();
    if (params.size() != headers.size()) {
        throw CheckpointError("checkpoint holds " + std::to_string(headers.size()) +
                              " tensors but the configured model has " +
                              std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].first != headers[i].name ||
            params[i].second->shape != headers[i].shape) {
            throw CheckpointError("checkpoint tensor " + headers[i].name +
                                  " does not match model parameter " +
                                  params[i].first);
        }
        read_doubles(in, params[i].second->data);
    }
    if (data.has_optimizer) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            data.first_moments.emplace_back(params[i].second->data.size(), 0.0);
            read_doubles(in, data.first_moments.back());
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            data.second_moments.emplace_back(params[i].second->data.size(), 0.0);
            read_doubles(in, data.second_moments.back());
        }
    }
    return data;
}

}  // namespace deconvdec
