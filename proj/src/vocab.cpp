#include "kernclass/vocab.hpp"

#include <sstream>

#include "io_util.hpp"
#include "kernclass/errors.hpp"

namespace kernclass {

std::optional<int> EncodingVocab::find(const Rational& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

int EncodingVocab::add(const Rational& v) {
    auto it = index_.find(v);
    if (it != index_.end()) return it->second;
    int idx = static_cast<int>(values_.size());
    values_.push_back(v);
    index_.emplace(v, idx);
    return idx;
}

int EncodingVocab::nearest(const Rational& v) const {
    if (values_.empty()) throw Error("nearest() on an empty vocabulary");
    int best = 0;
    Rational best_diff = (values_[0] - v).abs();
    for (int i = 1; i < static_cast<int>(values_.size()); ++i) {
        Rational diff = (values_[i] - v).abs();
        if (diff < best_diff || (diff == best_diff && values_[i] < values_[best])) {
            best = i;
            best_diff = diff;
        }
    }
    return best;
}

void EncodingVocab::observe_pitch(int semitone) {
    pitch_min_ = std::min(pitch_min_, semitone);
    pitch_max_ = std::max(pitch_max_, semitone);
}

void EncodingVocab::observe_score(const ParsedScore& score, const Rational& scale) {
    observe_voices(score.spine_count);
    for (const DataRow& row : score.rows) {
        for (const SpineCell& cell : row.cells) {
            if (cell.kind == CellKind::Continuation) continue;
            add(*cell.duration * scale);
            for (int p : cell.pitches) observe_pitch(p);
        }
    }
}

void EncodingVocab::set_pitch_range(int lo, int hi) {
    if (hi < lo) throw Error("pitch range with hi < lo");
    pitch_min_ = lo;
    pitch_max_ = hi;
}

std::string EncodingVocab::serialize() const {
    if (empty()) throw Error("serializing an empty vocabulary");
    std::ostringstream out;
    out << "kernclass-vocab v1\n";
    out << "pitch_base " << pitch_min_ << "\n";
    out << "pitch_count " << pitch_count() << "\n";
    out << "voice_count " << voices_ << "\n";
    out << "duration_count " << duration_count() << "\n";
    for (int i = 0; i < duration_count(); ++i) out << i << " " << values_[i].str() << "\n";
    return out.str();
}

EncodingVocab EncodingVocab::deserialize(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "kernclass-vocab v1")
        throw IoError("not a vocabulary file (bad header line)");

    auto read_field = [&](const std::string& key) -> long long {
        if (!std::getline(in, line)) throw IoError("vocabulary file truncated before " + key);
        std::istringstream ls(line);
        std::string k;
        long long v;
        if (!(ls >> k >> v) || k != key)
            throw IoError("vocabulary file: expected '" + key + "', got '" + line + "'");
        return v;
    };

    long long base = read_field("pitch_base");
    long long n = read_field("pitch_count");
    long long p = read_field("voice_count");
    long long d = read_field("duration_count");
    if (n <= 0 || p <= 0 || d <= 0) throw IoError("vocabulary file: non-positive dimension");

    EncodingVocab vocab;
    vocab.set_pitch_range(static_cast<int>(base), static_cast<int>(base + n - 1));
    vocab.voices_ = static_cast<int>(p);
    for (long long i = 0; i < d; ++i) {
        if (!std::getline(in, line)) throw IoError("vocabulary file truncated in value list");
        std::istringstream ls(line);
        long long idx;
        std::string value;
        if (!(ls >> idx >> value) || idx != i)
            throw IoError("vocabulary file: bad value line '" + line + "'");
        Rational r;
        try {
            r = Rational::parse(value);
        } catch (const Error&) {
            throw IoError("vocabulary file: bad rational '" + value + "'");
        }
        if (vocab.find(r)) throw IoError("vocabulary file: duplicate value " + value);
        vocab.add(r);
    }
    if (std::getline(in, line) && !line.empty())
        throw IoError("vocabulary file: trailing content '" + line + "'");
    return vocab;
}

std::string EncodingVocab::fingerprint() const {
    // FNV-1a over the canonical serialization.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : serialize()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void save_vocab(const std::filesystem::path& path, const EncodingVocab& vocab) {
    detail::atomic_write_file(path, vocab.serialize());
}

EncodingVocab load_vocab(const std::filesystem::path& path) {
    return EncodingVocab::deserialize(detail::read_file(path));
}

}  // namespace kernclass
