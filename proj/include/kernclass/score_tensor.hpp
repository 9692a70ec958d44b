#pragma once

#include <cstdint>
#include <vector>

#include "kernclass/kern_parser.hpp"
#include "kernclass/vocab.hpp"

namespace kernclass {

// Bit-packed binary tensor [rows, voices, channels]. Rows are padded to a
// 64-bit word boundary so row-level operations are word-aligned copies; the
// padding bits are always zero.
class BitTensor {
public:
    BitTensor() = default;
    BitTensor(int rows, int voices, int channels);

    int rows() const { return rows_; }
    int voices() const { return voices_; }
    int channels() const { return channels_; }
    int row_words() const { return row_words_; }

    bool get(int t, int p, int m) const {
        std::size_t bit = static_cast<std::size_t>(p) * channels_ + m;
        return (words_[static_cast<std::size_t>(t) * row_words_ + bit / 64] >> (bit % 64)) & 1u;
    }
    void set(int t, int p, int m) {
        std::size_t bit = static_cast<std::size_t>(p) * channels_ + m;
        words_[static_cast<std::size_t>(t) * row_words_ + bit / 64] |= std::uint64_t(1) << (bit % 64);
    }

    std::size_t popcount() const;

    const std::vector<std::uint64_t>& words() const { return words_; }
    std::vector<std::uint64_t>& words() { return words_; }

    friend bool operator==(const BitTensor&, const BitTensor&) = default;

private:
    int rows_ = 0;
    int voices_ = 0;
    int channels_ = 0;
    int row_words_ = 0;
    std::vector<std::uint64_t> words_;
};

struct EncodeOptions {
    // When set, out-of-vocabulary note-values map to the nearest vocabulary
    // value and out-of-range pitches clamp to the range edges instead of
    // raising UnknownValue / RangeError.
    bool permissive = false;
};

// Parsed score -> binary tensor [rows, vocab.voice_count(), channel_count].
// Note-values are multiplied by `scale` before vocabulary lookup. Voices
// beyond the score's spine count stay all-zero. Every cell sets at most one
// note-value bit; continuation cells set only the continuation bit.
BitTensor encode_score(const ParsedScore& score, const EncodingVocab& vocab, const Rational& scale,
                       const EncodeOptions& options = {});

// Exact inverse of encode_score over its image (chord pitches come back
// sorted ascending). `spine_count` selects how many leading voices carry
// data; all-zero cells within that range are an error.
ParsedScore decode_score(const BitTensor& x, const EncodingVocab& vocab, const Rational& scale,
                         int spine_count);

// Stacks three length-s windows (start, center, end) into a [3s, P, M]
// tensor. Windows reaching past the score end are zero-padded; scores
// shorter than s yield three identical padded copies.
BitTensor subsample(const BitTensor& x, int s);

// Row-major [t][p][m] dense copy.
std::vector<double> to_dense(const BitTensor& x);

}  // namespace kernclass
