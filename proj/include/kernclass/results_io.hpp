#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kernclass/evaluate.hpp"

namespace kernclass {

// One cross-validation run plus everything needed to reproduce it. Serialized
// without timing data, so identical seeds give byte-identical artifacts.
struct RunArtifact {
    std::string command;  // "xval", "subset", ...
    ModelConfig config;
    TrainConfig train;
    std::vector<std::string> class_names;
    std::vector<std::int64_t> class_counts;
    CrossValResult result;
};

// Writes run.txt, confusion.tsv and summary.tsv into `dir`.
void write_run_artifact(const std::filesystem::path& dir, const RunArtifact& artifact);
RunArtifact read_run_artifact(const std::filesystem::path& dir);

// Summary table text: composer / scores / accuracy rows sorted by descending
// score count (ties keep class order), then an overall row.
std::string render_summary(const RunArtifact& artifact);
std::string render_confusion(const RunArtifact& artifact);

// Sweep grid as TSV: arch, sample size, accuracy; plus per-arch rank
// correlation between size and accuracy.
std::string render_sweep(const std::vector<SweepCell>& cells);
void write_sweep(const std::filesystem::path& dir, const std::vector<SweepCell>& cells);

}  // namespace kernclass
