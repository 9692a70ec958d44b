#include "kernclass/score_tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "kernclass/errors.hpp"

namespace kernclass {

BitTensor::BitTensor(int rows, int voices, int channels)
    : rows_(rows), voices_(voices), channels_(channels) {
    if (rows < 0 || voices <= 0 || channels <= 0)
        throw ShapeMismatch("bit tensor with non-positive shape");
    std::size_t row_bits = static_cast<std::size_t>(voices) * channels;
    row_words_ = static_cast<int>((row_bits + 63) / 64);
    words_.assign(static_cast<std::size_t>(rows) * row_words_, 0);
}

std::size_t BitTensor::popcount() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

BitTensor encode_score(const ParsedScore& score, const EncodingVocab& vocab, const Rational& scale,
                       const EncodeOptions& options) {
    if (vocab.empty()) throw Error("encoding with an empty vocabulary");
    if (score.spine_count > vocab.voice_count())
        throw SpineOverflow(score.source_path + ": " + std::to_string(score.spine_count) +
                            " spines exceed the vocabulary's " +
                            std::to_string(vocab.voice_count()));

    const int n = vocab.pitch_count();
    const int base = vocab.pitch_base();
    BitTensor x(static_cast<int>(score.rows.size()), vocab.voice_count(), vocab.channel_count());

    for (int t = 0; t < static_cast<int>(score.rows.size()); ++t) {
        const DataRow& row = score.rows[t];
        for (int p = 0; p < static_cast<int>(row.cells.size()); ++p) {
            const SpineCell& cell = row.cells[p];
            if (cell.kind == CellKind::Continuation) {
                x.set(t, p, vocab.continuation_channel());
                continue;
            }
            Rational value = *cell.duration * scale;
            std::optional<int> idx = vocab.find(value);
            if (!idx) {
                if (!options.permissive)
                    throw UnknownValue(score.source_path + ": note-value " + value.str() +
                                       " not in vocabulary");
                idx = vocab.nearest(value);
            }
            x.set(t, p, n + *idx);
            for (int pitch : cell.pitches) {
                int q = pitch - base;
                if (q < 0 || q >= n) {
                    if (!options.permissive)
                        throw RangeError(score.source_path + ": pitch " + std::to_string(pitch) +
                                         " outside [" + std::to_string(base) + ", " +
                                         std::to_string(base + n) + ")");
                    q = std::clamp(q, 0, n - 1);
                }
                x.set(t, p, q);
            }
        }
    }
    return x;
}

ParsedScore decode_score(const BitTensor& x, const EncodingVocab& vocab, const Rational& scale,
                         int spine_count) {
    if (x.voices() != vocab.voice_count() || x.channels() != vocab.channel_count())
        throw ShapeMismatch("tensor shape does not match vocabulary");
    if (spine_count < 1 || spine_count > x.voices())
        throw ShapeMismatch("decode spine count out of range");

    const int n = vocab.pitch_count();
    const int d = vocab.duration_count();
    ParsedScore score;
    score.spine_count = spine_count;
    score.rows.resize(static_cast<std::size_t>(x.rows()));

    for (int t = 0; t < x.rows(); ++t) {
        DataRow& row = score.rows[t];
        row.cells.assign(static_cast<std::size_t>(spine_count), SpineCell::continuation());
        for (int p = 0; p < x.voices(); ++p) {
            bool cont = x.get(t, p, vocab.continuation_channel());
            std::vector<int> pitches;
            for (int q = 0; q < n; ++q)
                if (x.get(t, p, q)) pitches.push_back(q + vocab.pitch_base());
            int value_idx = -1;
            for (int j = 0; j < d; ++j) {
                if (!x.get(t, p, n + j)) continue;
                if (value_idx >= 0)
                    throw Error("cell (" + std::to_string(t) + "," + std::to_string(p) +
                                ") has two note-value bits");
                value_idx = j;
            }
            if (p >= spine_count) {
                if (cont || value_idx >= 0 || !pitches.empty())
                    throw Error("voice " + std::to_string(p) + " has bits beyond the spine count");
                continue;
            }
            if (cont) {
                if (value_idx >= 0 || !pitches.empty())
                    throw Error("continuation cell (" + std::to_string(t) + "," +
                                std::to_string(p) + ") has note content");
                continue;
            }
            if (value_idx < 0)
                throw Error("cell (" + std::to_string(t) + "," + std::to_string(p) +
                            ") has no note-value bit");
            Rational dur = vocab.values()[value_idx] / scale;
            row.cells[p] = pitches.empty() ? SpineCell::rest(dur)
                                           : SpineCell::notes(dur, std::move(pitches));
        }
    }
    return score;
}

BitTensor subsample(const BitTensor& x, int s) {
    if (s <= 0) throw ShapeMismatch("subsample window must be positive");
    BitTensor out(3 * s, x.voices(), x.channels());
    const int t_total = x.rows();
    const int starts[3] = {0, t_total > s ? (t_total - s) / 2 : 0, t_total > s ? t_total - s : 0};
    const std::uint64_t* src = x.words().data();
    std::uint64_t* dst = out.words().data();
    const std::size_t rw = static_cast<std::size_t>(x.row_words());
    for (int w = 0; w < 3; ++w) {
        for (int i = 0; i < s; ++i) {
            int t_src = starts[w] + i;
            if (t_src >= t_total) break;  // remaining rows stay zero
            std::memcpy(dst + (static_cast<std::size_t>(w) * s + i) * rw, src + t_src * rw,
                        rw * sizeof(std::uint64_t));
        }
    }
    return out;
}

std::vector<double> to_dense(const BitTensor& x) {
    std::vector<double> out(static_cast<std::size_t>(x.rows()) * x.voices() * x.channels(), 0.0);
    std::size_t i = 0;
    for (int t = 0; t < x.rows(); ++t)
        for (int p = 0; p < x.voices(); ++p)
            for (int m = 0; m < x.channels(); ++m) out[i++] = x.get(t, p, m) ? 1.0 : 0.0;
    return out;
}

}  // namespace kernclass
