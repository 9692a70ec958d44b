#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kernclass/score_tensor.hpp"
#include "kernclass/vocab.hpp"

namespace kernclass {

// One manifest record: a score file (possibly a glob pattern over one
// directory level), its composer, and the note-value scale applied before
// vocabulary lookup.
struct ManifestEntry {
    std::filesystem::path path;
    std::string composer;  // lowercase slug
    Rational scale{1, 1};
};

// Reads a delimited-text manifest: one "path<TAB>composer[<TAB>scale]" record
// per line, '#' comments and blank lines skipped, composer names lowercased,
// '*'/'?' wildcards in the filename component expanded in sorted order.
// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct LabeledScore {
    BitTensor x;
    int label = 0;
    int spine_count = 0;
    std::string path;
};

// A fully encoded corpus. Labels index `composers`, which lists slugs in
// manifest first-encounter order.
struct Corpus {
    std::vector<std::string> composers;
    std::vector<LabeledScore> scores;
    EncodingVocab vocab;

    int class_count() const { return static_cast<int>(composers.size()); }
    std::vector<int> labels() const;
    std::vector<int> class_counts() const;
};

// Parses and encodes every manifest entry. When `vocab` is absent a fresh
// vocabulary is built from this corpus first. Per-file parse failures are
// aggregated into one Error listing every failing path.
Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const std::optional<EncodingVocab>& vocab = std::nullopt,
                   const EncodeOptions& options = {});

EncodingVocab build_vocab_from_manifest(const std::filesystem::path& manifest_path);

// Binary encoded-corpus cache ("KCC1" magic). Embeds the vocabulary and the
// composer table, so a cache is self-contained.
void save_cache(const std::filesystem::path& path, const Corpus& corpus);
Corpus load_cache(const std::filesystem::path& path);

}  // namespace kernclass
