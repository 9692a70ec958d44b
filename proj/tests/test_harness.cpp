#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "kernclass/errors.hpp"
#include "kernclass/evaluate.hpp"
#include "kernclass/results_io.hpp"
#include "support/synth_corpus.hpp"

using namespace kernclass;

namespace {

// One corpus shared by all cases: 3 classes x 12 scores, where the
// "downward" scores are exact row reversals of the "upward" ones.
const Corpus& synth() {
    static Corpus corpus = [] {
        auto dir = std::filesystem::temp_directory_path() / "kc_harness_corpus";
        return load_corpus(
            kcsupport::write_synth_corpus(dir, {"upward", "downward", "chordal"}, 12, 64));
    }();
    return corpus;
}

ModelConfig tiny_cfg(const Corpus& corpus, Arch arch) {
    ModelConfig cfg = config_for_corpus(corpus, arch);
    cfg.conv_k = 24;
    cfg.conv_k2 = 24;
    cfg.pitch_k = 12;
    cfg.pitch_k2 = 24;
    return cfg;
}

TrainConfig tiny_tc(std::uint64_t seed, int epochs) {
    TrainConfig tc;
    tc.max_epochs = epochs;
    tc.sample_rows = 16;
    tc.seed = seed;
    return tc;
}

struct FlatResult {
    std::vector<double> numbers;
    std::vector<std::int64_t> counts;
    friend bool operator==(const FlatResult&, const FlatResult&) = default;
};

FlatResult flatten(const CrossValResult& r) {
    FlatResult f;
    f.numbers = {r.mean_accuracy, r.pooled_accuracy};
    for (const FoldOutcome& fold : r.folds) {
        f.numbers.push_back(fold.test_accuracy);
        f.numbers.push_back(fold.record.chosen_epoch);
        for (const EpochStats& e : fold.record.epochs) {
            f.numbers.push_back(e.train_loss);
            f.numbers.push_back(e.val_accuracy);
        }
    }
    f.counts = r.confusion.counts;
    return f;
}

}  // namespace

TEST_CASE("kfold_split partitions evenly and reproducibly") {
    std::vector<int> labels;
    for (int i = 0; i < 103; ++i) labels.push_back(i % 3);
    FoldPlan plan = kfold_split(labels, 10, 7);
    REQUIRE(plan.fold_of.size() == labels.size());

    std::vector<int> fold_sizes(10, 0);
    std::vector<std::vector<int>> per_label(3, std::vector<int>(10, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        REQUIRE(plan.fold_of[i] >= 0);
        REQUIRE(plan.fold_of[i] < 10);
        fold_sizes[static_cast<std::size_t>(plan.fold_of[i])] += 1;
        per_label[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(plan.fold_of[i])] += 1;
    }
    auto [lo, hi] = std::minmax_element(fold_sizes.begin(), fold_sizes.end());
    CHECK(*hi - *lo <= 1);
    // Stratification: each label spreads within one score per fold too.
    for (const auto& sizes : per_label) {
        auto [l, h] = std::minmax_element(sizes.begin(), sizes.end());
        CHECK(*h - *l <= 1);
    }

    CHECK(kfold_split(labels, 10, 7).fold_of == plan.fold_of);
    CHECK(kfold_split(labels, 10, 8).fold_of != plan.fold_of);
}

TEST_CASE("kfold roles cover the corpus exactly once") {
    std::vector<int> labels(23, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
    FoldPlan plan = kfold_split(labels, 10, 3);
    for (int fold = 0; fold < 10; ++fold) {
        std::vector<int> test = plan.ids_in_fold(fold);
        std::vector<int> val = plan.ids_in_fold(plan.validation_fold(fold));
        std::vector<int> train_set = plan.train_ids(fold);
        CHECK(plan.validation_fold(fold) == (fold + 1) % 10);
        std::set<int> all;
        for (int id : test) all.insert(id);
        for (int id : val) all.insert(id);
        for (int id : train_set) all.insert(id);
        CHECK(all.size() == labels.size());  // disjoint and covering
        CHECK(test.size() + val.size() + train_set.size() == labels.size());
    }
}

TEST_CASE("kfold_split needs one score per fold") {
    std::vector<int> labels(9, 0);
    CHECK_THROWS_AS(kfold_split(labels, 10, 1), TooFewScores);
    std::vector<int> ten(10, 0);
    FoldPlan plan = kfold_split(ten, 10, 1);
    for (int fold = 0; fold < 10; ++fold) CHECK(plan.ids_in_fold(fold).size() == 1);
}

TEST_CASE("training picks the earliest best validation epoch") {
    const Corpus& corpus = synth();
    ModelConfig cfg = tiny_cfg(corpus, Arch::Histogram);
    std::vector<int> train_set, val_set;
    for (int i = 0; i < static_cast<int>(corpus.scores.size()); ++i)
        (i % 4 == 0 ? val_set : train_set).push_back(i);

    TrainResult r = train(cfg, corpus, train_set, val_set, tiny_tc(5, 8));
    REQUIRE(r.record.epochs.size() == 8);
    REQUIRE(r.record.chosen_epoch >= 0);

    double best = -1.0;
    int earliest = -1;
    for (std::size_t e = 0; e < r.record.epochs.size(); ++e)
        if (r.record.epochs[e].val_accuracy > best) {
            best = r.record.epochs[e].val_accuracy;
            earliest = static_cast<int>(e);
        }
    CHECK(r.record.chosen_epoch == earliest);
    CHECK(r.record.epochs[static_cast<std::size_t>(r.record.chosen_epoch)].val_accuracy ==
          doctest::Approx(best));
    // The kept snapshot really is the argmax checkpoint: replaying it scores
    // the recorded best, and no later epoch beat it.
    CHECK(evaluate_accuracy(cfg, r.best, corpus, val_set, 16) == doctest::Approx(best));
    CHECK(best >= r.record.epochs.back().val_accuracy);
}

TEST_CASE("training validates its configuration") {
    const Corpus& corpus = synth();
    ModelConfig cfg = tiny_cfg(corpus, Arch::Histogram);
    std::vector<int> ids = {0, 1, 2, 3};
    CHECK_THROWS_AS(train(cfg, corpus, ids, ids, tiny_tc(1, 0)), Error);      // max_epochs
    CHECK_THROWS_AS(train(cfg, corpus, {}, ids, tiny_tc(1, 1)), TooFewScores);
    TrainConfig bad = tiny_tc(1, 1);
    bad.batch_size = 0;
    CHECK_THROWS_AS(train(cfg, corpus, ids, ids, bad), Error);
}

TEST_CASE("an exploding learning rate raises DivergenceError") {
    const Corpus& corpus = synth();
    ModelConfig cfg = tiny_cfg(corpus, Arch::Histogram);
    std::vector<int> ids;
    for (int i = 0; i < 12; ++i) ids.push_back(i);
    TrainConfig tc = tiny_tc(2, 10);
    tc.batch_size = 4;  // several optimizer steps per epoch
    tc.adam.lr = 1e308;
    CHECK_THROWS_AS(train(cfg, corpus, ids, ids, tc), DivergenceError);
}

TEST_CASE("cross-validation pools every test prediction exactly once") {
    const Corpus& corpus = synth();
    CrossValResult r = cross_validate(corpus, tiny_cfg(corpus, Arch::Histogram), tiny_tc(11, 4));
    REQUIRE(r.folds.size() == 10);
    CHECK(r.confusion.total() == static_cast<std::int64_t>(corpus.scores.size()));
    std::vector<int> counts = corpus.class_counts();
    for (int c = 0; c < corpus.class_count(); ++c)
        CHECK(r.confusion.row_total(c) == counts[static_cast<std::size_t>(c)]);
    CHECK(r.pooled_accuracy ==
          doctest::Approx(static_cast<double>(r.confusion.diagonal()) /
                          static_cast<double>(r.confusion.total())));
    for (const FoldOutcome& f : r.folds) {
        CHECK(f.test_accuracy >= 0.0);
        CHECK(f.test_accuracy <= 1.0);
    }
    // Row-normalized percentages sum to 100 within rounding.
    for (int c = 0; c < corpus.class_count(); ++c) {
        double row = 0.0;
        for (int p = 0; p < corpus.class_count(); ++p) row += r.confusion.row_percent(c, p);
        CHECK(row == doctest::Approx(100.0).epsilon(1e-3));
    }
}

TEST_CASE("cross-validation is deterministic and independent of jobs") {
    const Corpus& corpus = synth();
    ModelConfig cfg = tiny_cfg(corpus, Arch::Histogram);
    CrossValResult serial = cross_validate(corpus, cfg, tiny_tc(13, 3), 1);
    CrossValResult again = cross_validate(corpus, cfg, tiny_tc(13, 3), 1);
    CrossValResult parallel = cross_validate(corpus, cfg, tiny_tc(13, 3), 4);
    CHECK(flatten(serial) == flatten(again));
    CHECK(flatten(serial) == flatten(parallel));

    CrossValResult other_seed = cross_validate(corpus, cfg, tiny_tc(14, 3), 1);
    CHECK(flatten(serial) != flatten(other_seed));
}

TEST_CASE("subset_corpus relabels densely in the requested order") {
    const Corpus& corpus = synth();
    Corpus sub = subset_corpus(corpus, {"chordal", "upward"});
    CHECK(sub.composers == std::vector<std::string>{"chordal", "upward"});
    CHECK(sub.class_count() == 2);
    CHECK(sub.scores.size() == 24);
    int chordal = 0, upward = 0;
    for (const LabeledScore& s : sub.scores) {
        REQUIRE(s.label >= 0);
        REQUIRE(s.label < 2);
        (s.label == 0 ? chordal : upward) += 1;
    }
    CHECK(chordal == 12);
    CHECK(upward == 12);
    CHECK(sub.vocab == corpus.vocab);

    CHECK_THROWS_AS(subset_corpus(corpus, {"upward", "mozart"}), UnknownComposer);
    CHECK_THROWS_AS(subset_corpus(corpus, {"upward", "upward"}), UnknownComposer);
    CHECK_THROWS_AS(subset_corpus(corpus, {}), UnknownComposer);

    Corpus solo = subset_corpus(corpus, {"downward"});
    CHECK(solo.class_count() == 1);
    CHECK(solo.scores.size() == 12);
}

TEST_CASE("a single-class corpus cross-validates to a perfect 1x1 matrix") {
    Corpus solo = subset_corpus(synth(), {"upward"});
    CrossValResult r = cross_validate(solo, tiny_cfg(solo, Arch::Histogram), tiny_tc(3, 2));
    CHECK(r.confusion.classes == 1);
    CHECK(r.confusion.at(0, 0) == 12);
    CHECK(r.pooled_accuracy == 1.0);
    CHECK(r.confusion.row_percent(0, 0) == doctest::Approx(100.0));
}

TEST_CASE("a two-class model overfits its training set completely") {
    Corpus pair = subset_corpus(synth(), {"upward", "downward"});
    ModelConfig cfg = tiny_cfg(pair, Arch::Hybrid);
    std::vector<int> ids;
    for (int i = 0; i < static_cast<int>(pair.scores.size()); ++i) ids.push_back(i);

    TrainConfig tc = tiny_tc(21, 40);
    TrainResult r = train(cfg, pair, ids, ids, tc);
    CHECK(evaluate_accuracy(cfg, r.best, pair, ids, tc.sample_rows) == 1.0);
}

TEST_CASE("majority baseline picks the most frequent class") {
    std::vector<int> quartets;
    quartets.insert(quartets.end(), 209, 0);
    quartets.insert(quartets.end(), 82, 1);
    CHECK(majority_baseline(quartets) == doctest::Approx(209.0 / 291.0).epsilon(1e-12));

    CHECK(majority_baseline({0, 1, 0, 1}) == doctest::Approx(0.5));
    CHECK(majority_baseline({2, 2, 2}) == doctest::Approx(1.0));
    CHECK(majority_baseline({}) == 0.0);
}

TEST_CASE("spearman correlation ranks with tie averaging") {
    CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    CHECK(spearman_rho({1, 2, 2, 3}, {10, 20, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3}, {5, 5, 5}) == 0.0);
    CHECK(spearman_rho({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
    CHECK_THROWS_AS(spearman_rho({1, 2}, {1}), ShapeMismatch);
}

TEST_CASE("sample size sweep spans the architecture-size grid") {
    Corpus pair = subset_corpus(synth(), {"upward", "chordal"});
    ModelConfig base = tiny_cfg(pair, Arch::Histogram);
    TrainConfig tc = tiny_tc(17, 2);
    std::vector<SweepCell> grid =
        sample_size_sweep(pair, {Arch::Histogram, Arch::Voice}, {4, 16}, base, tc);
    REQUIRE(grid.size() == 4);
    CHECK(grid[0].arch == Arch::Histogram);
    CHECK(grid[0].sample_rows == 4);
    CHECK(grid[1].sample_rows == 16);
    CHECK(grid[2].arch == Arch::Voice);
    for (const SweepCell& cell : grid) {
        CHECK(cell.accuracy >= 0.0);
        CHECK(cell.accuracy <= 1.0);
    }
    CHECK_THROWS_AS(sample_size_sweep(pair, {Arch::Histogram}, {0}, base, tc), Error);
}
