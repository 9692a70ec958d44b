#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kernclass/corpus.hpp"
#include "kernclass/errors.hpp"
#include "kernclass/evaluate.hpp"
#include "kernclass/results_io.hpp"
#include "kernclass/vocab.hpp"

using namespace kernclass;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

struct Options {
    std::string manifest;
    std::string vocab;
    std::string cache;
    std::string out;
    std::uint64_t seed = 0;
    std::string arch = "hybrid";
    std::vector<int> sample_sizes;  // last value wins for single-size commands
    int epochs = 100;
    double lr = 1e-3;
    int jobs = 1;
    std::string composers;
    std::string report_dir;
};

Arch parse_arch(const std::string& name) {
    auto arch = arch_from_name(name);
    if (!arch)
        throw IoError("unknown architecture '" + name +
                      "' (expected histogram|voice|voice-deep|full|harmonic|hybrid)");
    return *arch;
}

TrainConfig make_train_config(const Options& o) {
    TrainConfig tc;
    tc.max_epochs = o.epochs;
    tc.adam.lr = o.lr;
    tc.seed = o.seed;
    if (!o.sample_sizes.empty()) tc.sample_rows = o.sample_sizes.back();
    return tc;
}

std::vector<std::string> split_composers(const std::string& joined) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : joined) {
        if (ch == ',') {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

RunArtifact run_cross_validation(const std::string& command, const Corpus& corpus, Arch arch,
                                 const Options& o) {
    RunArtifact artifact;
    artifact.command = command;
    artifact.config = config_for_corpus(corpus, arch).resolved();
    artifact.train = make_train_config(o);
    artifact.class_names = corpus.composers;
    for (int count : corpus.class_counts()) artifact.class_counts.push_back(count);
    artifact.result = cross_validate(corpus, artifact.config, artifact.train, o.jobs);
    return artifact;
}

int cmd_build_vocab(const Options& o) {
    EncodingVocab vocab = build_vocab_from_manifest(o.manifest);
    save_vocab(o.out, vocab);
    std::cout << "vocab: " << vocab.duration_count() << " note values, pitches ["
              << vocab.pitch_base() << ", " << vocab.pitch_base() + vocab.pitch_count() - 1
              << "], " << vocab.voice_count() << " voices -> " << o.out << "\n";
    return kExitOk;
}

int cmd_encode(const Options& o) {
    EncodingVocab vocab = load_vocab(o.vocab);
    Corpus corpus = load_corpus(o.manifest, vocab);
    save_cache(o.out, corpus);
    std::cout << "encoded " << corpus.scores.size() << " scores, " << corpus.class_count()
              << " composers -> " << o.out << "\n";
    return kExitOk;
}

int cmd_xval(const Options& o) {
    Corpus corpus = load_cache(o.cache);
    RunArtifact artifact = run_cross_validation("xval", corpus, parse_arch(o.arch), o);
    write_run_artifact(o.out, artifact);
    std::cout << render_summary(artifact) << "results written to " << o.out << "\n";
    return kExitOk;
}

int cmd_subset(const Options& o) {
    Corpus corpus = load_cache(o.cache);
    Corpus sub = subset_corpus(corpus, split_composers(o.composers));
    RunArtifact artifact = run_cross_validation("subset", sub, parse_arch(o.arch), o);
    write_run_artifact(o.out, artifact);
    std::cout << render_summary(artifact) << "results written to " << o.out << "\n";
    return kExitOk;
}

int cmd_sweep(const Options& o, const std::vector<std::string>& arch_names) {
    Corpus corpus = load_cache(o.cache);
    std::vector<Arch> archs;
    if (arch_names.empty())
        archs = all_archs();
    else
        for (const std::string& name : arch_names) archs.push_back(parse_arch(name));
    std::vector<int> sizes = o.sample_sizes;
    if (sizes.empty()) sizes = {10, 20, 50, 100, 250, 500};

    ModelConfig base = config_for_corpus(corpus, archs.front());
    std::vector<SweepCell> grid = sample_size_sweep(corpus, archs, sizes, base, make_train_config(o), o.jobs);
    write_sweep(o.out, grid);
    std::cout << render_sweep(grid) << "results written to " << o.out << "\n";
    return kExitOk;
}

int cmd_report(const Options& o) {
    if (!std::filesystem::exists(std::filesystem::path(o.report_dir) / "run.txt")) {
        std::cout << "no runs found in " << o.report_dir << "\n";
        return kExitOk;
    }
    RunArtifact artifact = read_run_artifact(o.report_dir);
    std::cout << "command " << artifact.command << ", arch " << arch_name(artifact.config.arch)
              << ", seed " << artifact.train.seed << ", sample rows " << artifact.train.sample_rows
              << ", epochs " << artifact.train.max_epochs << "\n\n"
              << render_summary(artifact) << "\n"
              << render_confusion(artifact);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"composer classification over **kern scores"};
    app.require_subcommand(1);
    Options o;
    std::vector<std::string> sweep_archs;

    auto add_manifest = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", o.manifest, "manifest TSV: path<TAB>composer[<TAB>scale]")
            ->required()
            ->envname("KERNCLASS_MANIFEST");
    };
    auto add_out = [&](CLI::App* cmd, const char* what) {
        cmd->add_option("--out", o.out, what)->required()->envname("KERNCLASS_OUT");
    };
    auto add_cache = [&](CLI::App* cmd) {
        cmd->add_option("--cache", o.cache, "encoded corpus cache")->required()->envname("KERNCLASS_CACHE");
    };
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--seed", o.seed, "global seed")->envname("KERNCLASS_SEED");
        cmd->add_option("--sample-size", o.sample_sizes, "subsample rows per window")
            ->envname("KERNCLASS_SAMPLE_SIZE");
        cmd->add_option("--epochs", o.epochs, "training epochs per fold")->envname("KERNCLASS_EPOCHS");
        cmd->add_option("--lr", o.lr, "Adam learning rate")->envname("KERNCLASS_LR");
        cmd->add_option("--jobs", o.jobs, "parallel fold workers")->envname("KERNCLASS_JOBS");
    };
    auto add_arch = [&](CLI::App* cmd) {
        cmd->add_option("--arch", o.arch, "histogram|voice|voice-deep|full|harmonic|hybrid")
            ->envname("KERNCLASS_ARCH");
    };

    CLI::App* build_vocab = app.add_subcommand("build-vocab", "scan a manifest into a value vocabulary");
    add_manifest(build_vocab);
    add_out(build_vocab, "vocabulary file to write");

    CLI::App* encode = app.add_subcommand("encode", "encode manifest scores into a binary cache");
    add_manifest(encode);
    encode->add_option("--vocab", o.vocab, "vocabulary file")->required()->envname("KERNCLASS_VOCAB");
    add_out(encode, "cache file to write");

    CLI::App* xval = app.add_subcommand("xval", "10-fold cross-validated training and evaluation");
    add_cache(xval);
    add_out(xval, "results directory");
    add_arch(xval);
    add_train_flags(xval);

    CLI::App* subset = app.add_subcommand("subset", "cross-validate on a composer subset");
    add_cache(subset);
    add_out(subset, "results directory");
    subset->add_option("--composers", o.composers, "comma-separated composer slugs")->required();
    add_arch(subset);
    add_train_flags(subset);

    CLI::App* sweep = app.add_subcommand("sweep", "accuracy across architectures and sample sizes");
    add_cache(sweep);
    add_out(sweep, "results directory");
    sweep->add_option("--arch", sweep_archs, "architectures to sweep (default: all)")
        ->envname("KERNCLASS_ARCH");
    add_train_flags(sweep);

    CLI::App* report = app.add_subcommand("report", "render the tables of a results directory");
    report->add_option("dir", o.report_dir, "results directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (*build_vocab) return cmd_build_vocab(o);
        if (*encode) return cmd_encode(o);
        if (*xval) return cmd_xval(o);
        if (*subset) return cmd_subset(o);
        if (*sweep) return cmd_sweep(o, sweep_archs);
        if (*report) return cmd_report(o);
        std::cerr << "error: no command\n";
        return kExitInput;
    } catch (const DivergenceError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const NonFiniteError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const ShapeMismatch& e) {
        std::cerr << "internal shape error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const LabelOutOfRange& e) {
        std::cerr << "internal label error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
