#include "kernclass/train.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "kernclass/errors.hpp"
#include "kernclass/tape.hpp"

namespace kernclass {

Tensor dense_sample(const BitTensor& x, int sample_rows) {
    BitTensor s = subsample(x, sample_rows);
    Tensor out({s.rows(), s.voices(), s.channels()});
    std::vector<double> dense = to_dense(s);
    std::copy(dense.begin(), dense.end(), out.data());
    return out;
}

double evaluate_accuracy(const ModelConfig& config, const ModelParams& params, const Corpus& corpus,
                         const std::vector<int>& ids, int sample_rows) {
    if (ids.empty()) return 0.0;
    int hits = 0;
    for (int id : ids) {
        const LabeledScore& score = corpus.scores[static_cast<std::size_t>(id)];
        Tape tape;
        std::vector<NodeId> nodes = params_on_tape(tape, params, false);
        NodeId logits = model_forward(tape, config, nodes, dense_sample(score.x, sample_rows));
        if (predict_class(tape.value(logits)) == score.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ids.size());
}

TrainResult train(const ModelConfig& config, const Corpus& corpus, const std::vector<int>& train_ids,
                  const std::vector<int>& val_ids, const TrainConfig& tc) {
    if (tc.max_epochs < 1) throw Error("max_epochs must be at least 1, got " + std::to_string(tc.max_epochs));
    if (tc.batch_size < 1) throw Error("batch_size must be at least 1, got " + std::to_string(tc.batch_size));
    if (tc.sample_rows < 1) throw Error("sample_rows must be at least 1, got " + std::to_string(tc.sample_rows));
    if (train_ids.empty()) throw TooFewScores("training set is empty");
    ModelConfig cfg = config.resolved();
    cfg.validate();
    for (int id : train_ids) {
        int label = corpus.scores[static_cast<std::size_t>(id)].label;
        if (label < 0 || label >= cfg.classes)
            throw LabelOutOfRange("label " + std::to_string(label) + " outside " +
                                  std::to_string(cfg.classes) + " classes");
    }

    const auto t0 = std::chrono::steady_clock::now();
    ModelParams params = init_params(cfg, tc.seed);
    Adam opt(tc.adam);
    // Distinct stream from the init draw so adding parameters never shifts
    // the shuffle order.
    std::mt19937_64 shuffle_rng(tc.seed * 0x9E3779B97F4A7C15ULL + 1);

    TrainResult out;
    out.record.epochs.reserve(static_cast<std::size_t>(tc.max_epochs));
    double best_val = -1.0;

    std::vector<int> order = train_ids;
    for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng() % i)]);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
            const int batch = static_cast<int>(end - start);

            Tape tape;
            std::vector<NodeId> leaves = params_on_tape(tape, params, true);
            NodeId sum = -1;
            for (std::size_t i = start; i < end; ++i) {
                const LabeledScore& score = corpus.scores[static_cast<std::size_t>(order[i])];
                NodeId logits =
                    model_forward(tape, cfg, leaves, dense_sample(score.x, tc.sample_rows));
                NodeId loss = tape.softmax_cross_entropy(logits, score.label);
                sum = (sum < 0) ? loss : tape.add(sum, loss);
            }
            NodeId batch_loss = tape.scale(sum, 1.0 / batch);
            const double loss_value = tape.value(batch_loss)[0];
            if (!std::isfinite(loss_value))
                throw DivergenceError("batch loss became non-finite at epoch " + std::to_string(epoch));
            tape.backward(batch_loss);

            std::vector<Tensor*> ptrs;
            std::vector<const Tensor*> grads;
            for (std::size_t p = 0; p < params.items.size(); ++p) {
                ptrs.push_back(&params.items[p].second);
                grads.push_back(&tape.grad(leaves[p]));
            }
            try {
                opt.step(ptrs, grads);
            } catch (const NonFiniteError& e) {
                throw DivergenceError(std::string("update diverged at epoch ") + std::to_string(epoch) +
                                      ": " + e.what());
            }
            loss_sum += loss_value * batch;
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.val_accuracy = evaluate_accuracy(cfg, params, corpus, val_ids, tc.sample_rows);
        out.record.epochs.push_back(stats);
        if (stats.val_accuracy > best_val) {
            best_val = stats.val_accuracy;
            out.best = params;
            out.record.chosen_epoch = epoch;
        }
        if (tc.stop_when_val_perfect && stats.val_accuracy >= 1.0) break;
    }

    out.record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace kernclass
