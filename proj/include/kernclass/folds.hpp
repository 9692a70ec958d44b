#pragma once

#include <cstdint>
#include <vector>

namespace kernclass {

// Deterministic stratified k-fold assignment. Scores of each label are
// shuffled with the seeded generator and dealt round-robin onto folds with
// one rolling counter, so both overall and per-label fold sizes differ by at
// most one.
struct FoldPlan {
    std::uint64_t seed = 0;
    int fold_count = 0;
    std::vector<int> fold_of;  // score index -> fold index

    std::vector<int> ids_in_fold(int fold) const;
    // Every id outside the test fold and its validation fold.
    std::vector<int> train_ids(int test_fold) const;
    int validation_fold(int test_fold) const { return (test_fold + 1) % fold_count; }
};

// Throws TooFewScores when |labels| < k.
FoldPlan kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed);

}  // namespace kernclass
