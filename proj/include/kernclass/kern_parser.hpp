#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kernclass/rational.hpp"

namespace kernclass {

// Parser for the subset of the **kern format needed to recover pitch,
// note-value, and voicing data. Everything else in a score (barlines,
// interpretations, comments, articulation and editorial marks) is skipped.

enum class CellKind { Continuation, Rest, Notes };

struct SpineCell {
    CellKind kind = CellKind::Continuation;
    // Fraction of a whole note. Present for Rest and Notes, absent for
    // Continuation.
    std::optional<Rational> duration;
    // Semitones above C1, one entry per chord note. Non-empty only for Notes.
    std::vector<int> pitches;

    static SpineCell continuation() { return SpineCell{}; }
    static SpineCell rest(Rational dur) { return SpineCell{CellKind::Rest, dur, {}}; }
    static SpineCell notes(Rational dur, std::vector<int> p) {
        return SpineCell{CellKind::Notes, dur, std::move(p)};
    }

    friend bool operator==(const SpineCell&, const SpineCell&) = default;
};

struct DataRow {
    std::vector<SpineCell> cells;  // exactly ParsedScore::spine_count entries

    friend bool operator==(const DataRow&, const DataRow&) = default;
};

struct ParsedScore {
    std::vector<DataRow> rows;
    int spine_count = 0;  // columns after spine-manipulator resolution
    std::string source_path;
};

struct ParseOptions {
    // Hard cap on resolved columns; exceeding it raises UnsupportedFeature.
    int max_spines = 16;
};

// Parses full **kern file contents. Headerless fragments (no "**kern" line)
// are accepted and treated as all-kern spines.
ParsedScore parse_score(std::string_view text, const ParseOptions& options = {},
                        std::string source_path = "");

// Pitch token ("a", "ff#", "BB-") -> semitones above C1, following the
// standard **kern octave rule: lowercase "c" is middle C (C4), repeated
// lowercase letters ascend, uppercase "C" is C3, repeated uppercase letters
// descend. '#' raises, '-' lowers, 'n' is neutral.
int pitch_to_semitone(std::string_view token);

// Duration token ("8", "2..", "0", "2%3.") -> fraction of a whole note.
// Digits are reciprocal note-values; a run of z zeros is 2^z whole notes
// (breve, long, maxima); "X%Y" is the rational value Y/X; each dot adds half
// the previous increment. Exact arithmetic throughout.
Rational parse_duration(std::string_view token);

}  // namespace kernclass
