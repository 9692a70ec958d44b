#include "kernclass/kern_parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "kernclass/errors.hpp"

namespace kernclass {

namespace {

bool is_pitch_letter(char c) {
    return (c >= 'a' && c <= 'g') || (c >= 'A' && c <= 'G');
}

// Signifiers that carry no pitch/note-value/voicing information: ties, slurs,
// phrases, beams, stems, ornaments, articulations, bowing, editorial marks.
bool is_ignorable_mark(char c) {
    static const std::string marks =
        "[]_(){}<>LJKk/\\'\"`~^:;,TtMmWwS$OoXxYyIiUuvVzNPpHhjRQq&@+|?";
    return marks.find(c) != std::string::npos;
}

int letter_semitone(char letter) {
    switch (std::tolower(static_cast<unsigned char>(letter))) {
        case 'c': return 0;
        case 'd': return 2;
        case 'e': return 4;
        case 'f': return 5;
        case 'g': return 7;
        case 'a': return 9;
        case 'b': return 11;
    }
    return -1;
}

struct NoteToken {
    std::optional<Rational> duration;
    std::optional<int> pitch;
    bool rest = false;
    bool grace = false;
};

// One note of a data token (one chord member). `line`/`col` locate the token
// start for error messages.
NoteToken parse_note_token(std::string_view tok, int line, int col) {
    NoteToken out;
    std::string dur_digits;
    std::string dur_rational;
    int dots = 0;
    char pitch_letter = 0;
    int letter_count = 0;
    int accidental = 0;
    bool has_pitch = false;

    std::size_t i = 0;
    while (i < tok.size()) {
        char c = tok[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            if (!dur_digits.empty())
                throw SyntaxError("second duration in token '" + std::string(tok) + "'", line,
                                  col + static_cast<int>(i));
            while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i])))
                dur_digits.push_back(tok[i++]);
            if (i < tok.size() && tok[i] == '%') {
                ++i;
                while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i])))
                    dur_rational.push_back(tok[i++]);
                if (dur_rational.empty())
                    throw SyntaxError("'%' without digits in '" + std::string(tok) + "'", line,
                                      col + static_cast<int>(i));
            }
            continue;
        }
        if (c == '.') {
            if (dur_digits.empty())
                throw SyntaxError("augmentation dot before duration in '" + std::string(tok) + "'",
                                  line, col + static_cast<int>(i));
            ++dots;
            ++i;
            continue;
        }
        if (is_pitch_letter(c)) {
            if (has_pitch)
                throw SyntaxError("two pitches in one note token '" + std::string(tok) + "'", line,
                                  col + static_cast<int>(i));
            pitch_letter = c;
            has_pitch = true;
            letter_count = 0;
            while (i < tok.size() && tok[i] == pitch_letter) {
                ++letter_count;
                ++i;
            }
            while (i < tok.size() && (tok[i] == '#' || tok[i] == '-' || tok[i] == 'n')) {
                if (tok[i] == '#') ++accidental;
                if (tok[i] == '-') --accidental;
                ++i;
            }
            continue;
        }
        if (c == 'r') {
            out.rest = true;
            ++i;
            continue;
        }
        if (c == 'q' || c == 'Q') {
            out.grace = true;
            ++i;
            continue;
        }
        if (is_ignorable_mark(c)) {
            ++i;
            continue;
        }
        throw SyntaxError("unexpected character '" + std::string(1, c) + "' in token '" +
                              std::string(tok) + "'",
                          line, col + static_cast<int>(i));
    }

    if (!dur_digits.empty()) {
        std::string text = dur_digits;
        if (!dur_rational.empty()) text += "%" + dur_rational;
        text.append(static_cast<std::size_t>(dots), '.');
        try {
            out.duration = parse_duration(text);
        } catch (const SyntaxError&) {
            throw SyntaxError("bad duration in token '" + std::string(tok) + "'", line, col);
        }
    }
    if (has_pitch) {
        bool lower = std::islower(static_cast<unsigned char>(pitch_letter));
        int octave = lower ? 3 + letter_count : 4 - letter_count;
        int semitone = (octave - 1) * 12 + letter_semitone(pitch_letter) + accidental;
        if (semitone < 0)
            throw RangeError("pitch in '" + std::string(tok) + "' lies below C1 (line " +
                             std::to_string(line) + ")");
        out.pitch = semitone;
    }
    return out;
}

SpineCell parse_data_token(std::string_view field, int line, int col) {
    if (field == ".") return SpineCell::continuation();

    std::vector<NoteToken> notes;
    bool dropped_grace = false;
    std::size_t pos = 0;
    while (pos <= field.size()) {
        std::size_t next = field.find(' ', pos);
        std::string_view sub =
            field.substr(pos, next == std::string_view::npos ? next : next - pos);
        if (!sub.empty()) {
            NoteToken n = parse_note_token(sub, line, col + static_cast<int>(pos));
            if (n.grace && !n.duration) {
                dropped_grace = true;  // gracenotes without a note-value carry no encodable data
            } else {
                notes.push_back(std::move(n));
            }
        }
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }

    if (notes.empty()) {
        if (dropped_grace) return SpineCell::continuation();
        throw SyntaxError("data token '" + std::string(field) + "' carries no note content", line,
                          col);
    }

    bool any_rest = std::any_of(notes.begin(), notes.end(), [](const NoteToken& n) { return n.rest; });
    if (any_rest) {
        if (notes.size() > 1 || notes[0].pitch)
            throw SyntaxError("rest mixed with notes in '" + std::string(field) + "'", line, col);
        if (!notes[0].duration)
            throw SyntaxError("rest without duration in '" + std::string(field) + "'", line, col);
        return SpineCell::rest(*notes[0].duration);
    }

    std::vector<int> pitches;
    pitches.reserve(notes.size());
    for (const NoteToken& n : notes) {
        if (!n.pitch)
            throw SyntaxError("duration without pitch in '" + std::string(field) + "'", line, col);
        if (!n.duration)
            throw SyntaxError("note without duration in '" + std::string(field) + "'", line, col);
        pitches.push_back(*n.pitch);
    }
    // Chords carry one note-value per member; the encoding keeps a single
    // value per cell, so the first member's value stands for the cell.
    return SpineCell::notes(*notes[0].duration, std::move(pitches));
}

struct Field {
    std::string_view text;
    int column;  // 1-based character offset in the line
};

std::vector<Field> split_fields(std::string_view line) {
    std::vector<Field> fields;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find('\t', pos);
        std::string_view f = line.substr(pos, next == std::string_view::npos ? next : next - pos);
        fields.push_back({f, static_cast<int>(pos) + 1});
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return fields;
}

struct Spine {
    int column;  // output column, -1 for non-kern spines
    bool is_kern;
};

}  // namespace

int pitch_to_semitone(std::string_view token) {
    if (token.empty()) throw SyntaxError("empty pitch token", 0, 0);
    char letter = token[0];
    if (!is_pitch_letter(letter))
        throw SyntaxError("pitch token '" + std::string(token) + "' must start with a-g or A-G", 0,
                          0);
    std::size_t i = 0;
    int count = 0;
    while (i < token.size() && token[i] == letter) {
        ++count;
        ++i;
    }
    int accidental = 0;
    while (i < token.size() && (token[i] == '#' || token[i] == '-' || token[i] == 'n')) {
        if (token[i] == '#') ++accidental;
        if (token[i] == '-') --accidental;
        ++i;
    }
    if (i != token.size())
        throw SyntaxError("malformed pitch token '" + std::string(token) + "'", 0, 0);
    bool lower = std::islower(static_cast<unsigned char>(letter));
    int octave = lower ? 3 + count : 4 - count;
    int semitone = (octave - 1) * 12 + letter_semitone(letter) + accidental;
    if (semitone < 0)
        throw RangeError("pitch '" + std::string(token) + "' lies below C1");
    return semitone;
}

Rational parse_duration(std::string_view token) {
    if (token.empty()) throw SyntaxError("empty duration token", 0, 0);
    std::size_t i = 0;
    std::string digits;
    while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i])))
        digits.push_back(token[i++]);
    if (digits.empty())
        throw SyntaxError("duration '" + std::string(token) + "' must start with digits", 0, 0);

    if (digits.size() > 18)
        throw SyntaxError("duration '" + std::string(token) + "' out of range", 0, 0);

    Rational base;
    if (i < token.size() && token[i] == '%') {
        ++i;
        std::string denom;
        while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i])))
            denom.push_back(token[i++]);
        if (denom.empty() || denom.size() > 18)
            throw SyntaxError("malformed rational duration '" + std::string(token) + "'", 0, 0);
        std::int64_t x = std::stoll(digits);
        std::int64_t y = std::stoll(denom);
        if (x == 0) throw SyntaxError("zero reciprocal in '" + std::string(token) + "'", 0, 0);
        base = Rational(y, x);
    } else if (digits.find_first_not_of('0') == std::string::npos) {
        // z zeros: breve, long, maxima = 2^z whole notes
        base = Rational(std::int64_t(1) << digits.size(), 1);
    } else {
        std::int64_t v = std::stoll(digits);
        base = Rational(1, v);
    }

    int dots = 0;
    while (i < token.size() && token[i] == '.') {
        ++dots;
        ++i;
    }
    if (i != token.size())
        throw SyntaxError("malformed duration token '" + std::string(token) + "'", 0, 0);
    if (dots > 16) throw SyntaxError("too many augmentation dots in '" + std::string(token) + "'", 0, 0);

    // Each dot adds half the previous increment:
    // base * (2 - 2^-dots) = base * (2^(dots+1) - 1) / 2^dots.
    Rational total = base * Rational((std::int64_t(1) << (dots + 1)) - 1, std::int64_t(1) << dots);
    return total;
}

ParsedScore parse_score(std::string_view text, const ParseOptions& options,
                        std::string source_path) {
    ParsedScore score;
    score.source_path = std::move(source_path);

    std::vector<Spine> active;
    bool initialized = false;
    int total_columns = 0;
    std::set<int> free_columns;

    auto alloc_column = [&]() -> int {
        if (!free_columns.empty()) {
            int c = *free_columns.begin();
            free_columns.erase(free_columns.begin());
            return c;
        }
        if (total_columns >= options.max_spines)
            throw UnsupportedFeature("more than " + std::to_string(options.max_spines) +
                                     " concurrent kern spines");
        return total_columns++;
    };

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.size() >= 2 && line[0] == '!' && line[1] == '!') continue;  // global comment

        std::vector<Field> fields = split_fields(line);

        if (!initialized) {
            bool header = std::all_of(fields.begin(), fields.end(), [](const Field& f) {
                return f.text.size() >= 2 && f.text[0] == '*' && f.text[1] == '*';
            });
            if (header) {
                for (const Field& f : fields) {
                    bool kern = f.text == "**kern";
                    active.push_back({kern ? alloc_column() : -1, kern});
                }
                initialized = true;
                continue;
            }
            // Headerless fragment: every column is a kern spine.
            for (std::size_t i = 0; i < fields.size(); ++i) active.push_back({alloc_column(), true});
            initialized = true;
        }

        if (fields.size() != active.size())
            throw SyntaxError("line has " + std::to_string(fields.size()) + " spines, expected " +
                                  std::to_string(active.size()),
                              line_no, 1);

        char head = fields[0].text.empty() ? '\0' : fields[0].text[0];
        if (head == '!') continue;  // local comments
        if (head == '=') {
            for (const Field& f : fields)
                if (f.text.empty() || f.text[0] != '=')
                    throw SyntaxError("barline mixed with data", line_no, f.column);
            continue;
        }
        if (head == '*') {
            for (const Field& f : fields)
                if (f.text.empty() || f.text[0] != '*')
                    throw SyntaxError("interpretation mixed with data", line_no, f.column);

            auto is_manip = [](std::string_view t) {
                return t == "*^" || t == "*v" || t == "*-" || t == "*+" || t == "*x";
            };
            bool any_manip = std::any_of(fields.begin(), fields.end(),
                                         [&](const Field& f) { return is_manip(f.text); });
            if (!any_manip) continue;  // tandem interpretations are skipped

            for (const Field& f : fields)
                if (f.text != "*" && !is_manip(f.text))
                    throw SyntaxError("tandem interpretation mixed with spine manipulators",
                                      line_no, f.column);

            std::vector<Spine> next;
            std::size_t i = 0;
            while (i < fields.size()) {
                std::string_view t = fields[i].text;
                if (t == "*") {
                    next.push_back(active[i]);
                    ++i;
                } else if (t == "*^") {
                    next.push_back(active[i]);
                    next.push_back({active[i].is_kern ? alloc_column() : -1, active[i].is_kern});
                    ++i;
                } else if (t == "*v") {
                    std::size_t j = i;
                    while (j < fields.size() && fields[j].text == "*v") ++j;
                    if (j - i < 2)
                        throw SyntaxError("*v must merge at least two adjacent spines", line_no,
                                          fields[i].column);
                    next.push_back(active[i]);
                    for (std::size_t r = i + 1; r < j; ++r)
                        if (active[r].column >= 0) free_columns.insert(active[r].column);
                    i = j;
                } else if (t == "*-") {
                    if (active[i].column >= 0) free_columns.insert(active[i].column);
                    ++i;
                } else {
                    throw UnsupportedFeature("spine manipulator '" + std::string(t) +
                                             "' is outside the supported subset (line " +
                                             std::to_string(line_no) + ")");
                }
            }
            active = std::move(next);
            continue;
        }

        // Data line. Columns without an active kern spine stay Continuation.
        DataRow row;
        row.cells.assign(static_cast<std::size_t>(total_columns), SpineCell::continuation());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!active[i].is_kern) continue;
            row.cells[static_cast<std::size_t>(active[i].column)] =
                parse_data_token(fields[i].text, line_no, fields[i].column);
        }
        score.rows.push_back(std::move(row));
    }

    if (total_columns == 0) throw UnsupportedFeature("no **kern spines in input");

    score.spine_count = total_columns;
    for (DataRow& row : score.rows)
        row.cells.resize(static_cast<std::size_t>(total_columns), SpineCell::continuation());
    return score;
}

}  // namespace kernclass
