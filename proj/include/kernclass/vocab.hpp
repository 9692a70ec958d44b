#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kernclass/kern_parser.hpp"
#include "kernclass/rational.hpp"

namespace kernclass {

// Corpus-derived encoding parameters: the categorical note-value vocabulary
// (indices assigned in first-encounter order), the semitone range of the
// corpus, and the maximum concurrent voice count. Every encoded tensor is
// [T, voice_count, channel_count] with channels laid out as
//   [0, N)      pitch indicators (semitone - pitch_base)
//   [N, N+D)    note-value indicators
//   N+D         continuation indicator
class EncodingVocab {
public:
    int pitch_base() const { return pitch_min_; }
    int pitch_count() const { return pitch_max_ - pitch_min_ + 1; }  // N
    int duration_count() const { return static_cast<int>(values_.size()); }  // D
    int voice_count() const { return voices_; }  // P
    int channel_count() const { return pitch_count() + duration_count() + 1; }
    int continuation_channel() const { return pitch_count() + duration_count(); }

    const std::vector<Rational>& values() const { return values_; }

    std::optional<int> find(const Rational& v) const;
    // Inserts if absent; returns the index either way.
    int add(const Rational& v);
    // Closest vocabulary value by absolute difference; ties break toward the
    // smaller value. Requires a non-empty vocabulary.
    int nearest(const Rational& v) const;

    void observe_pitch(int semitone);
    void observe_voices(int count) { voices_ = std::max(voices_, count); }
    // Folds one parsed score into the vocabulary. Note-values are multiplied
    // by `scale` before insertion (collection-level note-value normalization).
    void observe_score(const ParsedScore& score, const Rational& scale);

    void set_pitch_range(int lo, int hi);

    bool empty() const { return values_.empty() || pitch_max_ < pitch_min_; }

    // Stable hex digest of the full serialized vocabulary; artifacts embed it
    // so stale caches and mismatched models are detected.
    std::string fingerprint() const;

    // Canonical text serialization (byte-identical across save/load cycles).
    std::string serialize() const;
    static EncodingVocab deserialize(const std::string& text);

    friend bool operator==(const EncodingVocab& a, const EncodingVocab& b) {
        return a.values_ == b.values_ && a.pitch_min_ == b.pitch_min_ &&
               a.pitch_max_ == b.pitch_max_ && a.voices_ == b.voices_;
    }

private:
    std::vector<Rational> values_;
    std::unordered_map<Rational, int, RationalHash> index_;
    int pitch_min_ = std::numeric_limits<int>::max();
    int pitch_max_ = std::numeric_limits<int>::min();
    int voices_ = 0;
};

void save_vocab(const std::filesystem::path& path, const EncodingVocab& vocab);
EncodingVocab load_vocab(const std::filesystem::path& path);

}  // namespace kernclass
