#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kernclass/tape.hpp"
#include "kernclass/tensor.hpp"

namespace kernclass {

// The six classifier families. All of them end in mean pooling over the full
// score followed by a bias-free linear head, so every forward pass accepts
// scores of any length.
enum class Arch {
    Histogram,   // pool the raw input, one linear layer
    Voice,       // one time-convolution shared across voices
    VoiceDeep,   // two stacked shared time-convolutions
    Full,        // time-convolutions over all voices jointly
    Harmonic,    // pitch-translation-invariant convolution + duration mix-in
    Hybrid,      // VoiceDeep branch + Harmonic branch, summed logits
};

const char* arch_name(Arch arch);
std::optional<Arch> arch_from_name(std::string_view name);
std::vector<Arch> all_archs();

struct ModelConfig {
    Arch arch = Arch::Histogram;
    int classes = 0;

    // Encoding geometry, copied from the vocabulary.
    int pitch_count = 0;     // N: pitch channels
    int duration_count = 0;  // D: note-value channels
    int voice_count = 0;     // P

    // Layer widths; zero means "use the architecture's default".
    int window = 3;    // time-convolution window (rows)
    int conv_k = 0;    // first time-conv features
    int conv_k2 = 0;   // second time-conv features
    int pitch_j = 0;   // pitch-convolution window (semitone offsets)
    int pitch_k = 0;   // pitch-conv features
    int pitch_k2 = 0;  // mixing-layer features

    int channel_count() const { return pitch_count + duration_count + 1; }

    // Replaces zero widths with the architecture defaults.
    ModelConfig resolved() const;
    // Throws ShapeMismatch on non-positive or out-of-range fields.
    void validate() const;
};

// Parameter tensors in a fixed per-architecture order. Gradient updates,
// checkpoints and tape nodes all use this order.
struct ModelParams {
    std::vector<std::pair<std::string, Tensor>> items;

    Tensor* find(const std::string& name);
    const Tensor* find(const std::string& name) const;
    std::size_t total_scalars() const;
};

// Names and shapes of every parameter for a resolved config, in order.
std::vector<std::pair<std::string, std::vector<int>>> param_spec(const ModelConfig& config);

// Uniform(-1/sqrt(fanin), +1/sqrt(fanin)) per tensor, fanin = first dim,
// drawn in param_spec order from one generator seeded with `seed`.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Registers every parameter on the tape, tracked (leaf) or not (constant),
// in params order.
std::vector<NodeId> params_on_tape(Tape& tape, const ModelParams& params, bool tracked);

// Builds the forward graph for one dense score [T, voice_count, channels]
// and returns the logits node [classes]. `param_nodes` must come from
// params_on_tape with a matching config.
NodeId model_forward(Tape& tape, const ModelConfig& config,
                     const std::vector<NodeId>& param_nodes, const Tensor& input);

// Index of the largest logit; the lowest index wins ties.
int predict_class(const Tensor& logits);

struct LoadedModel {
    ModelConfig config;
    ModelParams params;
    std::string vocab_fingerprint;
};

// Writes the tensors to `path` and a readable sidecar to `path + ".meta"`
// recording the architecture, widths and vocabulary fingerprint.
void save_model(const std::filesystem::path& path, const ModelConfig& config,
                const ModelParams& params, const std::string& vocab_fingerprint);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace kernclass
