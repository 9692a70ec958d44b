#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kernclass/corpus.hpp"
#include "kernclass/folds.hpp"
#include "kernclass/train.hpp"

namespace kernclass {

// Square count matrix; rows are true classes, columns predictions.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::int64_t> counts;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int c) : classes(c), counts(static_cast<std::size_t>(c) * c, 0) {}

    std::int64_t& at(int truth, int pred) {
        return counts[static_cast<std::size_t>(truth) * classes + pred];
    }
    std::int64_t at(int truth, int pred) const {
        return counts[static_cast<std::size_t>(truth) * classes + pred];
    }
    std::int64_t row_total(int truth) const;
    std::int64_t total() const;
    std::int64_t diagonal() const;
    double overall_accuracy() const;  // diagonal / total
    double row_percent(int truth, int pred) const;
    void add(const ConfusionMatrix& other);
};

struct FoldOutcome {
    int test_fold = 0;
    double test_accuracy = 0.0;
    RunRecord record;
};

struct CrossValResult {
    std::vector<FoldOutcome> folds;  // ordered by test fold index
    ConfusionMatrix confusion;       // all folds pooled
    double mean_accuracy = 0.0;      // mean of per-fold accuracies
    double pooled_accuracy = 0.0;    // confusion diagonal / total
};

// Fills classes and encoding geometry from the corpus; widths stay at zero
// for resolved() to default.
ModelConfig config_for_corpus(const Corpus& corpus, Arch arch);

// Ten train runs per the fold plan (seeded from tc.seed), test predictions
// pooled into one confusion matrix. `jobs` folds run concurrently; results
// do not depend on jobs because each fold is self-contained and aggregation
// follows fold order.
CrossValResult cross_validate(const Corpus& corpus, const ModelConfig& config, const TrainConfig& tc,
                              int jobs = 1);

// Restricts the corpus to the named composers (slugs), relabelling classes
// densely in the order given. Throws UnknownComposer for absent names.
Corpus subset_corpus(const Corpus& corpus, const std::vector<std::string>& composers);

struct SweepCell {
    Arch arch = Arch::Histogram;
    int sample_rows = 0;
    double accuracy = 0.0;  // pooled cross-validated accuracy
};

// Re-runs cross-validation for every architecture at every sample size.
std::vector<SweepCell> sample_size_sweep(const Corpus& corpus, const std::vector<Arch>& archs,
                                         const std::vector<int>& sizes, const ModelConfig& base,
                                         const TrainConfig& tc, int jobs = 1);

// Accuracy of always predicting the most frequent label (ties: lowest label).
double majority_baseline(const std::vector<int>& labels);

// Spearman rank correlation with average ranks on ties; NaN-free, returns 0
// when either side is constant.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace kernclass
