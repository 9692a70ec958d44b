#pragma once

#include <cstdint>
#include <vector>

#include "kernclass/adam.hpp"
#include "kernclass/corpus.hpp"
#include "kernclass/models.hpp"

namespace kernclass {

struct TrainConfig {
    int max_epochs = 100;
    int batch_size = 32;
    int sample_rows = 500;  // rows per subsample window (inputs carry 3x this)
    AdamConfig adam;
    std::uint64_t seed = 0;
    // Stop as soon as validation accuracy reaches 1.0 (off by default so the
    // retrospective best-epoch selection sees every epoch).
    bool stop_when_val_perfect = false;
};

struct EpochStats {
    double train_loss = 0.0;     // mean cross-entropy over the epoch's samples
    double val_accuracy = 0.0;
};

struct RunRecord {
    std::vector<EpochStats> epochs;
    int chosen_epoch = -1;       // earliest epoch with the best val accuracy
    double test_accuracy = 0.0;  // filled in by cross-validation
    double wall_seconds = 0.0;   // never serialized; artifacts stay byte-stable
};

struct TrainResult {
    ModelParams best;  // snapshot taken at chosen_epoch
    RunRecord record;
};

// Subsampled dense input for one score: [3*sample_rows, voices, channels].
Tensor dense_sample(const BitTensor& x, int sample_rows);

// Fraction of ids whose predicted class matches the label.
double evaluate_accuracy(const ModelConfig& config, const ModelParams& params, const Corpus& corpus,
                         const std::vector<int>& ids, int sample_rows);

// Mini-batch Adam over `train_ids` for max_epochs, reshuffling every epoch,
// snapshotting parameters whenever validation accuracy strictly improves and
// returning the best snapshot (retrospective early stopping). Throws
// DivergenceError when a batch loss stops being finite.
TrainResult train(const ModelConfig& config, const Corpus& corpus, const std::vector<int>& train_ids,
                  const std::vector<int>& val_ids, const TrainConfig& tc);

}  // namespace kernclass
