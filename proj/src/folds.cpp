#include "kernclass/folds.hpp"

#include <algorithm>
#include <random>

#include "kernclass/errors.hpp"

namespace kernclass {

std::vector<int> FoldPlan::ids_in_fold(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> FoldPlan::train_ids(int test_fold) const {
    const int val = validation_fold(test_fold);
    std::vector<int> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != test_fold && fold_of[i] != val) out.push_back(static_cast<int>(i));
    return out;
}

FoldPlan kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw TooFewScores("fold count must be at least 2, got " + std::to_string(k));
    if (static_cast<int>(labels.size()) < k)
        throw TooFewScores("need at least " + std::to_string(k) + " scores for " + std::to_string(k) +
                           " folds, have " + std::to_string(labels.size()));

    int max_label = 0;
    for (int l : labels) {
        if (l < 0) throw LabelOutOfRange("negative label " + std::to_string(l));
        max_label = std::max(max_label, l);
    }

    std::vector<std::vector<int>> by_label(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_label[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));

    FoldPlan plan;
    plan.seed = seed;
    plan.fold_count = k;
    plan.fold_of.assign(labels.size(), 0);

    // One generator and one rolling fold counter across all labels keeps the
    // global fold sizes within one of each other while each label's scores
    // spread as evenly as its count allows.
    std::mt19937_64 rng(seed);
    int next_fold = 0;
    for (auto& group : by_label) {
        for (std::size_t i = group.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(group[i - 1], group[j]);
        }
        for (int id : group) {
            plan.fold_of[static_cast<std::size_t>(id)] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    return plan;
}

}  // namespace kernclass
