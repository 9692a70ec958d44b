#include "kernclass/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "kernclass/errors.hpp"
#include "kernclass/tape.hpp"

namespace kernclass {

std::int64_t ConfusionMatrix::row_total(int truth) const {
    std::int64_t s = 0;
    for (int c = 0; c < classes; ++c) s += at(truth, c);
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::diagonal() const {
    std::int64_t s = 0;
    for (int c = 0; c < classes; ++c) s += at(c, c);
    return s;
}

double ConfusionMatrix::overall_accuracy() const {
    const std::int64_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(diagonal()) / static_cast<double>(n);
}

double ConfusionMatrix::row_percent(int truth, int pred) const {
    const std::int64_t n = row_total(truth);
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(at(truth, pred)) / static_cast<double>(n);
}

void ConfusionMatrix::add(const ConfusionMatrix& other) {
    if (other.classes != classes) throw ShapeMismatch("confusion matrices differ in class count");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ModelConfig config_for_corpus(const Corpus& corpus, Arch arch) {
    ModelConfig cfg;
    cfg.arch = arch;
    cfg.classes = corpus.class_count();
    cfg.pitch_count = corpus.vocab.pitch_count();
    cfg.duration_count = corpus.vocab.duration_count();
    cfg.voice_count = corpus.vocab.voice_count();
    return cfg;
}

namespace {

// Seeds for fold runs are spread out so neighbouring folds never share an
// initialization or shuffle stream.
std::uint64_t fold_seed(std::uint64_t base, int fold) {
    return base + 0x100000001B3ULL * static_cast<std::uint64_t>(fold + 1);
}

struct FoldRun {
    FoldOutcome outcome;
    ConfusionMatrix confusion;
};

FoldRun run_fold(const Corpus& corpus, const ModelConfig& cfg, const TrainConfig& tc,
                 const FoldPlan& plan, int fold) {
    TrainConfig fold_tc = tc;
    fold_tc.seed = fold_seed(tc.seed, fold);
    const std::vector<int> test = plan.ids_in_fold(fold);
    const std::vector<int> val = plan.ids_in_fold(plan.validation_fold(fold));
    const std::vector<int> train_set = plan.train_ids(fold);

    TrainResult trained;
    try {
        trained = train(cfg, corpus, train_set, val, fold_tc);
    } catch (const DivergenceError& e) {
        // Tag runaway training with its fold; configuration errors pass
        // through untouched so callers can classify them.
        throw DivergenceError("fold " + std::to_string(fold) + ": " + e.what());
    }

    FoldRun out;
    out.confusion = ConfusionMatrix(cfg.classes);
    int hits = 0;
    for (int id : test) {
        const LabeledScore& score = corpus.scores[static_cast<std::size_t>(id)];
        Tape tape;
        std::vector<NodeId> nodes = params_on_tape(tape, trained.best, false);
        NodeId logits = model_forward(tape, cfg, nodes, dense_sample(score.x, tc.sample_rows));
        const int pred = predict_class(tape.value(logits));
        out.confusion.at(score.label, pred) += 1;
        if (pred == score.label) ++hits;
    }
    out.outcome.test_fold = fold;
    out.outcome.test_accuracy = test.empty() ? 0.0 : static_cast<double>(hits) / test.size();
    out.outcome.record = trained.record;
    out.outcome.record.test_accuracy = out.outcome.test_accuracy;
    return out;
}

}  // namespace

CrossValResult cross_validate(const Corpus& corpus, const ModelConfig& config, const TrainConfig& tc,
                              int jobs) {
    ModelConfig cfg = config.resolved();
    cfg.validate();
    const int k = 10;
    FoldPlan plan = kfold_split(corpus.labels(), k, tc.seed);

    std::vector<FoldRun> runs(static_cast<std::size_t>(k));
    std::exception_ptr failure;
    std::mutex failure_mu;

    const int workers = std::max(1, std::min(jobs, k));
    if (workers == 1) {
        for (int fold = 0; fold < k; ++fold)
            runs[static_cast<std::size_t>(fold)] = run_fold(corpus, cfg, tc, plan, fold);
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int fold = next.fetch_add(1); fold < k; fold = next.fetch_add(1)) {
                try {
                    runs[static_cast<std::size_t>(fold)] = run_fold(corpus, cfg, tc, plan, fold);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    CrossValResult out;
    out.confusion = ConfusionMatrix(cfg.classes);
    double acc_sum = 0.0;
    for (int fold = 0; fold < k; ++fold) {
        FoldRun& run = runs[static_cast<std::size_t>(fold)];
        out.folds.push_back(run.outcome);
        out.confusion.add(run.confusion);
        acc_sum += run.outcome.test_accuracy;
    }
    out.mean_accuracy = acc_sum / k;
    out.pooled_accuracy = out.confusion.overall_accuracy();
    return out;
}

Corpus subset_corpus(const Corpus& corpus, const std::vector<std::string>& composers) {
    if (composers.empty()) throw UnknownComposer("composer list is empty");
    std::vector<int> old_labels;
    for (const std::string& name : composers) {
        auto it = std::find(corpus.composers.begin(), corpus.composers.end(), name);
        if (it == corpus.composers.end()) throw UnknownComposer("composer '" + name + "' not in corpus");
        int old_label = static_cast<int>(it - corpus.composers.begin());
        if (std::find(old_labels.begin(), old_labels.end(), old_label) != old_labels.end())
            throw UnknownComposer("composer '" + name + "' listed twice");
        old_labels.push_back(old_label);
    }

    Corpus out;
    out.composers = composers;
    out.vocab = corpus.vocab;
    for (const LabeledScore& score : corpus.scores) {
        auto it = std::find(old_labels.begin(), old_labels.end(), score.label);
        if (it == old_labels.end()) continue;
        LabeledScore copy = score;
        copy.label = static_cast<int>(it - old_labels.begin());
        out.scores.push_back(std::move(copy));
    }
    return out;
}

std::vector<SweepCell> sample_size_sweep(const Corpus& corpus, const std::vector<Arch>& archs,
                                         const std::vector<int>& sizes, const ModelConfig& base,
                                         const TrainConfig& tc, int jobs) {
    for (int s : sizes)
        if (s < 1) throw Error("sample size must be positive, got " + std::to_string(s));
    std::vector<SweepCell> grid;
    for (Arch arch : archs) {
        ModelConfig cfg = base;
        cfg.arch = arch;
        for (int s : sizes) {
            TrainConfig cell_tc = tc;
            cell_tc.sample_rows = s;
            CrossValResult r = cross_validate(corpus, cfg, cell_tc, jobs);
            grid.push_back({arch, s, r.pooled_accuracy});
        }
    }
    return grid;
}

double majority_baseline(const std::vector<int>& labels) {
    if (labels.empty()) return 0.0;
    int max_label = *std::max_element(labels.begin(), labels.end());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(max_label) + 1, 0);
    for (int l : labels) counts[static_cast<std::size_t>(l)] += 1;
    std::int64_t best = *std::max_element(counts.begin(), counts.end());
    return static_cast<double>(best) / static_cast<double>(labels.size());
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeMismatch("rank correlation needs equal-length series");
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
    const double mean = 0.5 * static_cast<double>(n + 1);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    if (da == 0.0 || db == 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

}  // namespace kernclass
