#include "kernclass/results_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "io_util.hpp"
#include "kernclass/errors.hpp"

namespace kernclass {

namespace {

// Shortest round-trip decimal form, so artifacts are byte-stable across runs
// while still reloading to the exact double.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

std::string fmt_pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
    return buf;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw IoError(where + ": bad number '" + s + "'");
    }
}

long parse_long(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw IoError(where + ": bad integer '" + s + "'");
    }
}

}  // namespace

void write_run_artifact(const std::filesystem::path& dir, const RunArtifact& artifact) {
    const ModelConfig& c = artifact.config;
    const TrainConfig& t = artifact.train;
    std::ostringstream run;
    run << "kernclass-run v1\n";
    run << "command " << artifact.command << "\n";
    run << "arch " << arch_name(c.arch) << "\n";
    run << "seed " << t.seed << "\n";
    run << "classes " << c.classes << "\n";
    run << "pitch_count " << c.pitch_count << "\n";
    run << "duration_count " << c.duration_count << "\n";
    run << "voice_count " << c.voice_count << "\n";
    run << "window " << c.window << "\n";
    run << "conv_k " << c.conv_k << "\n";
    run << "conv_k2 " << c.conv_k2 << "\n";
    run << "pitch_j " << c.pitch_j << "\n";
    run << "pitch_k " << c.pitch_k << "\n";
    run << "pitch_k2 " << c.pitch_k2 << "\n";
    run << "max_epochs " << t.max_epochs << "\n";
    run << "batch_size " << t.batch_size << "\n";
    run << "sample_rows " << t.sample_rows << "\n";
    run << "lr " << fmt(t.adam.lr) << "\n";
    for (std::size_t i = 0; i < artifact.class_names.size(); ++i)
        run << "class " << i << " " << artifact.class_names[i] << " " << artifact.class_counts[i]
            << "\n";
    run << "mean_accuracy " << fmt(artifact.result.mean_accuracy) << "\n";
    run << "pooled_accuracy " << fmt(artifact.result.pooled_accuracy) << "\n";
    for (const FoldOutcome& f : artifact.result.folds) {
        run << "fold " << f.test_fold << " chosen_epoch " << f.record.chosen_epoch
            << " test_accuracy " << fmt(f.test_accuracy) << " curve ";
        for (std::size_t e = 0; e < f.record.epochs.size(); ++e) {
            if (e) run << ",";
            run << fmt(f.record.epochs[e].train_loss) << ":" << fmt(f.record.epochs[e].val_accuracy);
        }
        run << "\n";
    }
    detail::atomic_write_file(dir / "run.txt", run.str());
    detail::atomic_write_file(dir / "confusion.tsv", render_confusion(artifact));
    detail::atomic_write_file(dir / "summary.tsv", render_summary(artifact));
}

RunArtifact read_run_artifact(const std::filesystem::path& dir) {
    const std::filesystem::path path = dir / "run.txt";
    std::istringstream in(detail::read_file(path));
    const std::string where = path.string();
    std::string line;
    if (!std::getline(in, line) || line != "kernclass-run v1")
        throw IoError(where + ": not a run record");

    RunArtifact a;
    ModelConfig& c = a.config;
    TrainConfig& t = a.train;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        auto next = [&]() {
            std::string v;
            if (!(fields >> v)) throw IoError(where + ": truncated line '" + line + "'");
            return v;
        };
        if (key == "command") a.command = next();
        else if (key == "arch") {
            auto arch = arch_from_name(next());
            if (!arch) throw IoError(where + ": unknown architecture");
            c.arch = *arch;
        } else if (key == "seed") t.seed = static_cast<std::uint64_t>(parse_long(next(), where));
        else if (key == "classes") c.classes = static_cast<int>(parse_long(next(), where));
        else if (key == "pitch_count") c.pitch_count = static_cast<int>(parse_long(next(), where));
        else if (key == "duration_count") c.duration_count = static_cast<int>(parse_long(next(), where));
        else if (key == "voice_count") c.voice_count = static_cast<int>(parse_long(next(), where));
        else if (key == "window") c.window = static_cast<int>(parse_long(next(), where));
        else if (key == "conv_k") c.conv_k = static_cast<int>(parse_long(next(), where));
        else if (key == "conv_k2") c.conv_k2 = static_cast<int>(parse_long(next(), where));
        else if (key == "pitch_j") c.pitch_j = static_cast<int>(parse_long(next(), where));
        else if (key == "pitch_k") c.pitch_k = static_cast<int>(parse_long(next(), where));
        else if (key == "pitch_k2") c.pitch_k2 = static_cast<int>(parse_long(next(), where));
        else if (key == "max_epochs") t.max_epochs = static_cast<int>(parse_long(next(), where));
        else if (key == "batch_size") t.batch_size = static_cast<int>(parse_long(next(), where));
        else if (key == "sample_rows") t.sample_rows = static_cast<int>(parse_long(next(), where));
        else if (key == "lr") t.adam.lr = parse_double(next(), where);
        else if (key == "class") {
            std::size_t index = static_cast<std::size_t>(parse_long(next(), where));
            std::string name = next();
            std::int64_t count = parse_long(next(), where);
            if (index != a.class_names.size()) throw IoError(where + ": class rows out of order");
            a.class_names.push_back(name);
            a.class_counts.push_back(count);
        } else if (key == "mean_accuracy") a.result.mean_accuracy = parse_double(next(), where);
        else if (key == "pooled_accuracy") a.result.pooled_accuracy = parse_double(next(), where);
        else if (key == "fold") {
            FoldOutcome f;
            f.test_fold = static_cast<int>(parse_long(next(), where));
            if (next() != "chosen_epoch") throw IoError(where + ": malformed fold line");
            f.record.chosen_epoch = static_cast<int>(parse_long(next(), where));
            if (next() != "test_accuracy") throw IoError(where + ": malformed fold line");
            f.test_accuracy = parse_double(next(), where);
            f.record.test_accuracy = f.test_accuracy;
            if (next() != "curve") throw IoError(where + ": malformed fold line");
            std::string curve;
            fields >> curve;
            std::istringstream points(curve);
            std::string point;
            while (std::getline(points, point, ',')) {
                auto colon = point.find(':');
                if (colon == std::string::npos) throw IoError(where + ": malformed curve point");
                EpochStats s;
                s.train_loss = parse_double(point.substr(0, colon), where);
                s.val_accuracy = parse_double(point.substr(colon + 1), where);
                f.record.epochs.push_back(s);
            }
            a.result.folds.push_back(std::move(f));
        } else {
            throw IoError(where + ": unknown key '" + key + "'");
        }
    }
    if (a.class_names.empty()) throw IoError(where + ": record lists no classes");
    c = c.resolved();
    c.validate();

    const std::filesystem::path cpath = dir / "confusion.tsv";
    std::istringstream cin_(detail::read_file(cpath));
    a.result.confusion = ConfusionMatrix(static_cast<int>(a.class_names.size()));
    int row = -1;  // -1 while still before the header line
    while (std::getline(cin_, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string first;
        std::getline(fields, first, '\t');
        if (row < 0) {
            row = 0;
            continue;  // header row of predicted-class names
        }
        if (row >= a.result.confusion.classes) throw IoError(cpath.string() + ": too many rows");
        if (first != a.class_names[static_cast<std::size_t>(row)])
            throw IoError(cpath.string() + ": row label '" + first + "' out of order");
        for (int col = 0; col < a.result.confusion.classes; ++col) {
            std::string cell;
            if (!std::getline(fields, cell, '\t'))
                throw IoError(cpath.string() + ": truncated row '" + first + "'");
            a.result.confusion.at(row, col) = parse_long(cell, cpath.string());
        }
        ++row;
    }
    if (row != a.result.confusion.classes) throw IoError(cpath.string() + ": missing rows");
    return a;
}

std::string render_confusion(const RunArtifact& artifact) {
    const ConfusionMatrix& m = artifact.result.confusion;
    std::ostringstream out;
    out << "# pooled test confusion counts; rows true class, columns predicted\n";
    for (const std::string& name : artifact.class_names) out << "\t" << name;
    out << "\n";
    for (int r = 0; r < m.classes; ++r) {
        out << artifact.class_names[static_cast<std::size_t>(r)];
        for (int c = 0; c < m.classes; ++c) out << "\t" << m.at(r, c);
        out << "\n";
    }
    return out.str();
}

std::string render_summary(const RunArtifact& artifact) {
    const ConfusionMatrix& m = artifact.result.confusion;
    std::vector<int> order(artifact.class_names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return artifact.class_counts[static_cast<std::size_t>(a)] >
               artifact.class_counts[static_cast<std::size_t>(b)];
    });

    std::ostringstream out;
    out << "composer\tscores\taccuracy\n";
    for (int idx : order) {
        out << artifact.class_names[static_cast<std::size_t>(idx)] << "\t"
            << artifact.class_counts[static_cast<std::size_t>(idx)] << "\t"
            << fmt_pct(m.row_percent(idx, idx) / 100.0) << "\n";
    }
    std::int64_t total = std::accumulate(artifact.class_counts.begin(), artifact.class_counts.end(),
                                         std::int64_t{0});
    out << "overall\t" << total << "\t" << fmt_pct(artifact.result.pooled_accuracy) << "\n";
    return out.str();
}

std::string render_sweep(const std::vector<SweepCell>& cells) {
    std::ostringstream out;
    out << "arch\tsample_rows\taccuracy\n";
    for (const SweepCell& cell : cells)
        out << arch_name(cell.arch) << "\t" << cell.sample_rows << "\t" << fmt(cell.accuracy) << "\n";

    // Per-architecture rank correlation between sample size and accuracy.
    std::vector<Arch> seen;
    for (const SweepCell& cell : cells)
        if (std::find(seen.begin(), seen.end(), cell.arch) == seen.end()) seen.push_back(cell.arch);
    for (Arch arch : seen) {
        std::vector<double> sizes, accs;
        for (const SweepCell& cell : cells)
            if (cell.arch == arch) {
                sizes.push_back(cell.sample_rows);
                accs.push_back(cell.accuracy);
            }
        out << "# spearman " << arch_name(arch) << " " << fmt(spearman_rho(sizes, accs)) << "\n";
    }
    return out.str();
}

void write_sweep(const std::filesystem::path& dir, const std::vector<SweepCell>& cells) {
    detail::atomic_write_file(dir / "sweep.tsv", render_sweep(cells));
}

}  // namespace kernclass
