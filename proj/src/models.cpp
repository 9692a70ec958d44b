#include "kernclass/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "io_util.hpp"
#include "kernclass/checkpoint.hpp"
#include "kernclass/errors.hpp"

namespace kernclass {

namespace {

struct ArchNameRow {
    Arch arch;
    const char* name;
};

constexpr ArchNameRow kArchNames[] = {
    {Arch::Histogram, "histogram"}, {Arch::Voice, "voice"},       {Arch::VoiceDeep, "voice-deep"},
    {Arch::Full, "full"},           {Arch::Harmonic, "harmonic"}, {Arch::Hybrid, "hybrid"},
};

void require_positive(const char* what, int v) {
    if (v <= 0) throw ShapeMismatch(std::string(what) + " must be positive, got " + std::to_string(v));
}

}  // namespace

const char* arch_name(Arch arch) {
    for (const auto& row : kArchNames)
        if (row.arch == arch) return row.name;
    throw Error("unknown architecture id");
}

std::optional<Arch> arch_from_name(std::string_view name) {
    for (const auto& row : kArchNames)
        if (name == row.name) return row.arch;
    return std::nullopt;
}

std::vector<Arch> all_archs() {
    std::vector<Arch> out;
    for (const auto& row : kArchNames) out.push_back(row.arch);
    return out;
}

ModelConfig ModelConfig::resolved() const {
    ModelConfig c = *this;
    switch (c.arch) {
        case Arch::Histogram:
            break;
        case Arch::Voice:
            if (c.conv_k == 0) c.conv_k = 500;
            break;
        case Arch::VoiceDeep:
        case Arch::Full:
            if (c.conv_k == 0) c.conv_k = 300;
            if (c.conv_k2 == 0) c.conv_k2 = 300;
            break;
        case Arch::Harmonic:
            if (c.pitch_j == 0) c.pitch_j = c.pitch_count / 2;
            if (c.pitch_k == 0) c.pitch_k = 64;
            if (c.pitch_k2 == 0) c.pitch_k2 = 500;
            break;
        case Arch::Hybrid:
            if (c.conv_k == 0) c.conv_k = 300;
            if (c.conv_k2 == 0) c.conv_k2 = 300;
            if (c.pitch_j == 0) c.pitch_j = c.pitch_count / 2;
            if (c.pitch_k == 0) c.pitch_k = 64;
            if (c.pitch_k2 == 0) c.pitch_k2 = 500;
            break;
    }
    return c;
}

void ModelConfig::validate() const {
    // One class is legal (degenerate subset runs); zero is not.
    if (classes < 1) throw ShapeMismatch("model needs at least 1 class, got " + std::to_string(classes));
    require_positive("pitch_count", pitch_count);
    require_positive("duration_count", duration_count);
    require_positive("voice_count", voice_count);
    require_positive("window", window);
    bool conv = arch == Arch::Voice || arch == Arch::VoiceDeep || arch == Arch::Full || arch == Arch::Hybrid;
    bool deep = arch == Arch::VoiceDeep || arch == Arch::Full || arch == Arch::Hybrid;
    bool harm = arch == Arch::Harmonic || arch == Arch::Hybrid;
    if (conv) require_positive("conv_k", conv_k);
    if (deep) require_positive("conv_k2", conv_k2);
    if (harm) {
        require_positive("pitch_j", pitch_j);
        require_positive("pitch_k", pitch_k);
        require_positive("pitch_k2", pitch_k2);
        if (pitch_j > pitch_count)
            throw ShapeMismatch("pitch window " + std::to_string(pitch_j) + " exceeds pitch channel count " +
                                std::to_string(pitch_count));
    }
}

Tensor* ModelParams::find(const std::string& name) {
    for (auto& [n, t] : items)
        if (n == name) return &t;
    return nullptr;
}

const Tensor* ModelParams::find(const std::string& name) const {
    for (const auto& [n, t] : items)
        if (n == name) return &t;
    return nullptr;
}

std::size_t ModelParams::total_scalars() const {
    std::size_t n = 0;
    for (const auto& [name, t] : items) n += t.size();
    return n;
}

std::vector<std::pair<std::string, std::vector<int>>> param_spec(const ModelConfig& config) {
    ModelConfig c = config.resolved();
    c.validate();
    const int M = c.channel_count();
    const int C = c.classes;
    const int n = c.window;
    std::vector<std::pair<std::string, std::vector<int>>> spec;
    switch (c.arch) {
        case Arch::Histogram:
            spec.push_back({"head", {M, C}});
            break;
        case Arch::Voice:
            spec.push_back({"conv1", {n * M, c.conv_k}});
            spec.push_back({"head", {c.conv_k, C}});
            break;
        case Arch::VoiceDeep:
            spec.push_back({"conv1", {n * M, c.conv_k}});
            spec.push_back({"conv2", {n * c.conv_k, c.conv_k2}});
            spec.push_back({"head", {c.conv_k2, C}});
            break;
        case Arch::Full:
            spec.push_back({"conv1", {n * c.voice_count * M, c.conv_k}});
            spec.push_back({"conv2", {n * c.conv_k, c.conv_k2}});
            spec.push_back({"head", {c.conv_k2, C}});
            break;
        case Arch::Harmonic:
            spec.push_back({"pitch1", {c.pitch_j * c.voice_count, c.pitch_k}});
            spec.push_back({"mix2", {c.pitch_k, c.pitch_k2}});
            spec.push_back({"dur3", {c.duration_count + 1, c.pitch_k2}});
            spec.push_back({"head", {c.pitch_k2, C}});
            break;
        case Arch::Hybrid:
            spec.push_back({"conv1", {n * M, c.conv_k}});
            spec.push_back({"conv2", {n * c.conv_k, c.conv_k2}});
            spec.push_back({"head_conv", {c.conv_k2, C}});
            spec.push_back({"pitch1", {c.pitch_j * c.voice_count, c.pitch_k}});
            spec.push_back({"mix2", {c.pitch_k, c.pitch_k2}});
            spec.push_back({"dur3", {c.duration_count + 1, c.pitch_k2}});
            spec.push_back({"head_harm", {c.pitch_k2, C}});
            break;
    }
    return spec;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ModelParams params;
    for (const auto& [name, shape] : param_spec(config)) {
        double bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
        params.items.push_back({name, uniform_tensor(shape, -bound, bound, rng)});
    }
    return params;
}

std::vector<NodeId> params_on_tape(Tape& tape, const ModelParams& params, bool tracked) {
    std::vector<NodeId> nodes;
    nodes.reserve(params.items.size());
    for (const auto& [name, t] : params.items)
        nodes.push_back(tracked ? tape.leaf(t) : tape.constant(t));
    return nodes;
}

namespace {

// [T, P, M] -> [T, P*M]: row-major data is already laid out that way.
Tensor flatten_voices(const Tensor& input) {
    Tensor out({input.dim(0), input.dim(1) * input.dim(2)});
    std::copy_n(input.data(), input.size(), out.data());
    return out;
}

// Channel slice [T, P, M] -> [T, P, count] starting at channel `first`.
Tensor slice_channels(const Tensor& input, int first, int count) {
    const int T = input.dim(0), P = input.dim(1), M = input.dim(2);
    Tensor out({T, P, count});
    for (int t = 0; t < T; ++t)
        for (int p = 0; p < P; ++p)
            std::copy_n(input.data() + (static_cast<std::size_t>(t) * P + p) * M + first, count,
                        out.data() + (static_cast<std::size_t>(t) * P + p) * count);
    return out;
}

// relu(conv) twice over shared-voice filters, then pool everything: [k2].
NodeId conv_tower(Tape& tape, const ModelConfig& c, const Tensor& input, NodeId w1, NodeId w2) {
    NodeId x = tape.constant(input);
    NodeId h1 = tape.relu(tape.conv_time_voices(x, w1, c.window));
    NodeId h2 = tape.relu(tape.conv_time_voices(h1, w2, c.window));
    return tape.mean_pool_all(h2);
}

// Pitch-convolution branch: per-step pitch features averaged over offsets,
// mixed with the per-step voice-averaged duration/continuation profile: [k2].
NodeId harmonic_tower(Tape& tape, const ModelConfig& c, const Tensor& input, NodeId w1, NodeId w2,
                      NodeId w3) {
    const int N = c.pitch_count;
    const int D = c.duration_count;
    NodeId f = tape.constant(slice_channels(input, 0, N));
    NodeId d = tape.constant(slice_channels(input, N, D + 1));
    NodeId h1 = tape.relu(tape.conv_pitch(f, w1, c.pitch_j));  // [T, N, k]
    NodeId ht = tape.mean_over_axis1(h1);                      // [T, k]
    NodeId dbar = tape.mean_over_axis1(d);                     // [T, D+1]
    NodeId mixed = tape.relu(tape.add(tape.linear(ht, w2), tape.linear(dbar, w3)));
    return tape.mean_pool_rows(mixed);
}

}  // namespace

NodeId model_forward(Tape& tape, const ModelConfig& config, const std::vector<NodeId>& param_nodes,
                     const Tensor& input) {
    ModelConfig c = config.resolved();
    c.validate();
    if (input.rank() != 3)
        throw ShapeMismatch("model input must be [time, voices, channels], got " + input.shape_str());
    if (input.dim(0) < 1) throw ShapeMismatch("model input needs at least one time step");
    if (input.dim(1) != c.voice_count || input.dim(2) != c.channel_count())
        throw ShapeMismatch("model input " + input.shape_str() + " does not match voices=" +
                            std::to_string(c.voice_count) + " channels=" + std::to_string(c.channel_count()));
    const std::size_t want = param_spec(c).size();
    if (param_nodes.size() != want)
        throw ShapeMismatch("expected " + std::to_string(want) + " parameter nodes, got " +
                            std::to_string(param_nodes.size()));

    switch (c.arch) {
        case Arch::Histogram:
            return tape.linear(tape.mean_pool_all(tape.constant(input)), param_nodes[0]);
        case Arch::Voice: {
            NodeId h = tape.relu(tape.conv_time_voices(tape.constant(input), param_nodes[0], c.window));
            return tape.linear(tape.mean_pool_all(h), param_nodes[1]);
        }
        case Arch::VoiceDeep:
            return tape.linear(conv_tower(tape, c, input, param_nodes[0], param_nodes[1]), param_nodes[2]);
        case Arch::Full: {
            NodeId x = tape.constant(flatten_voices(input));
            NodeId h1 = tape.relu(tape.conv_time(x, param_nodes[0], c.window));
            NodeId h2 = tape.relu(tape.conv_time(h1, param_nodes[1], c.window));
            return tape.linear(tape.mean_pool_rows(h2), param_nodes[2]);
        }
        case Arch::Harmonic:
            return tape.linear(
                harmonic_tower(tape, c, input, param_nodes[0], param_nodes[1], param_nodes[2]),
                param_nodes[3]);
        case Arch::Hybrid: {
            NodeId lc = tape.linear(conv_tower(tape, c, input, param_nodes[0], param_nodes[1]),
                                    param_nodes[2]);
            NodeId lh = tape.linear(
                harmonic_tower(tape, c, input, param_nodes[3], param_nodes[4], param_nodes[5]),
                param_nodes[6]);
            return tape.add(lc, lh);
        }
    }
    throw Error("unknown architecture id");
}

int predict_class(const Tensor& logits) {
    if (logits.rank() != 1 || logits.dim(0) < 1)
        throw ShapeMismatch("logits must be a non-empty vector, got " + logits.shape_str());
    int best = 0;
    for (int i = 1; i < logits.dim(0); ++i)
        if (logits[static_cast<std::size_t>(i)] > logits[static_cast<std::size_t>(best)]) best = i;
    return best;
}

void save_model(const std::filesystem::path& path, const ModelConfig& config,
                const ModelParams& params, const std::string& vocab_fingerprint) {
    ModelConfig c = config.resolved();
    c.validate();
    std::vector<std::pair<std::string, const Tensor*>> named;
    for (const auto& [name, t] : params.items) named.push_back({name, &t});
    save_tensors(path, named);

    std::ostringstream meta;
    meta << "kernclass-model v1\n";
    meta << "arch " << arch_name(c.arch) << "\n";
    meta << "classes " << c.classes << "\n";
    meta << "pitch_count " << c.pitch_count << "\n";
    meta << "duration_count " << c.duration_count << "\n";
    meta << "voice_count " << c.voice_count << "\n";
    meta << "window " << c.window << "\n";
    meta << "conv_k " << c.conv_k << "\n";
    meta << "conv_k2 " << c.conv_k2 << "\n";
    meta << "pitch_j " << c.pitch_j << "\n";
    meta << "pitch_k " << c.pitch_k << "\n";
    meta << "pitch_k2 " << c.pitch_k2 << "\n";
    meta << "vocab_fingerprint " << vocab_fingerprint << "\n";
    detail::atomic_write_file(path.string() + ".meta", meta.str());
}

LoadedModel load_model(const std::filesystem::path& path) {
    const std::string meta_path = path.string() + ".meta";
    std::istringstream in(detail::read_file(meta_path));
    std::string line;
    if (!std::getline(in, line) || line != "kernclass-model v1")
        throw IoError(meta_path + ": not a model description");
    LoadedModel out;
    ModelConfig& c = out.config;
    std::string arch_text;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string key, value;
        if (!(fields >> key >> value)) throw IoError(meta_path + ": malformed line '" + line + "'");
        try {
            if (key == "arch") arch_text = value;
            else if (key == "classes") c.classes = std::stoi(value);
            else if (key == "pitch_count") c.pitch_count = std::stoi(value);
            else if (key == "duration_count") c.duration_count = std::stoi(value);
            else if (key == "voice_count") c.voice_count = std::stoi(value);
            else if (key == "window") c.window = std::stoi(value);
            else if (key == "conv_k") c.conv_k = std::stoi(value);
            else if (key == "conv_k2") c.conv_k2 = std::stoi(value);
            else if (key == "pitch_j") c.pitch_j = std::stoi(value);
            else if (key == "pitch_k") c.pitch_k = std::stoi(value);
            else if (key == "pitch_k2") c.pitch_k2 = std::stoi(value);
            else if (key == "vocab_fingerprint") out.vocab_fingerprint = value;
            else throw IoError(meta_path + ": unknown key '" + key + "'");
        } catch (const std::logic_error&) {
            throw IoError(meta_path + ": bad number in line '" + line + "'");
        }
    }
    auto arch = arch_from_name(arch_text);
    if (!arch) throw IoError(meta_path + ": unknown architecture '" + arch_text + "'");
    c.arch = *arch;
    c.validate();

    auto tensors = load_tensors(path);
    auto spec = param_spec(c);
    if (tensors.size() != spec.size())
        throw IoError(path.string() + ": expected " + std::to_string(spec.size()) + " tensors, found " +
                      std::to_string(tensors.size()));
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (tensors[i].first != spec[i].first)
            throw IoError(path.string() + ": tensor " + std::to_string(i) + " is '" + tensors[i].first +
                          "', expected '" + spec[i].first + "'");
        if (tensors[i].second.shape() != spec[i].second)
            throw IoError(path.string() + ": tensor '" + tensors[i].first + "' has shape " +
                          tensors[i].second.shape_str() + ", expected another shape");
        out.params.items.push_back({tensors[i].first, std::move(tensors[i].second)});
    }
    return out;
}

}  // namespace kernclass
