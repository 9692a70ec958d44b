#include "kernclass/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <sstream>

#include "io_util.hpp"
#include "kernclass/errors.hpp"
#include "kernclass/kern_parser.hpp"

namespace kernclass {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// '*' and '?' wildcards, anchored at both ends.
bool glob_match(std::string_view pattern, std::string_view name) {
    std::size_t p = 0, n = 0, star = std::string_view::npos, star_n = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == name[n] || pattern[p] == '?')) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            star_n = n;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            n = ++star_n;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::vector<std::filesystem::path> expand_entry(const std::filesystem::path& path) {
    std::string name = path.filename().string();
    if (name.find('*') == std::string::npos && name.find('?') == std::string::npos) return {path};
    std::filesystem::path dir = path.parent_path().empty() ? "." : path.parent_path();
    if (!std::filesystem::is_directory(dir))
        throw IoError("manifest pattern directory does not exist: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && glob_match(name, entry.path().filename().string()))
            out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw IoError("manifest pattern matches no files: " + path.string());
    return out;
}

// ------------------------------------------------------ binary primitives --

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

struct Reader {
    const std::string& data;
    std::size_t pos = 0;
    explicit Reader(const std::string& d) : data(d) {}

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw IoError("cache file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data[pos++])) << (8 * i);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

std::vector<int> Corpus::labels() const {
    std::vector<int> out;
    out.reserve(scores.size());
    for (const LabeledScore& s : scores) out.push_back(s.label);
    return out;
}

std::vector<int> Corpus::class_counts() const {
    std::vector<int> out(composers.size(), 0);
    for (const LabeledScore& s : scores) ++out[static_cast<std::size_t>(s.label)];
    return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::string text = detail::read_file(path);
    std::filesystem::path base = path.parent_path();

    std::vector<ManifestEntry> entries;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            std::size_t tab = line.find('\t', pos);
            fields.push_back(trim(line.substr(pos, tab == std::string::npos ? tab : tab - pos)));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() || fields[1].empty())
            throw IoError(path.string() + ":" + std::to_string(line_no) +
                          ": manifest line needs path<TAB>composer[<TAB>scale]");

        ManifestEntry e;
        std::filesystem::path p = fields[0];
        e.path = p.is_absolute() ? p : base / p;
        e.composer = lower(fields[1]);
        if (fields.size() == 3) {
            try {
                e.scale = Rational::parse(fields[2]);
            } catch (const Error&) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad scale '" +
                              fields[2] + "'");
            }
            if (e.scale <= Rational(0))
                throw IoError(path.string() + ":" + std::to_string(line_no) +
                              ": scale must be positive");
        }

        for (const std::filesystem::path& concrete : expand_entry(e.path))
            entries.push_back({concrete, e.composer, e.scale});
    }
    return entries;
}

namespace {

struct ParsedEntry {
    ParsedScore score;
    std::string composer;
    Rational scale;
};

std::vector<ParsedEntry> parse_all(const std::filesystem::path& manifest_path) {
    std::vector<ManifestEntry> entries = load_manifest(manifest_path);
    if (entries.empty()) throw IoError(manifest_path.string() + ": manifest lists no scores");

    std::vector<ParsedEntry> parsed;
    std::string failures;
    int failure_count = 0;
    for (const ManifestEntry& e : entries) {
        try {
            std::string text = detail::read_file(e.path);
            parsed.push_back({parse_score(text, {}, e.path.string()), e.composer, e.scale});
        } catch (const Error& err) {
            ++failure_count;
            failures += "\n  " + e.path.string() + ": " + err.what();
        }
    }
    if (failure_count > 0)
        throw Error(std::to_string(failure_count) + " score(s) failed to parse:" + failures);
    return parsed;
}

}  // namespace

EncodingVocab build_vocab_from_manifest(const std::filesystem::path& manifest_path) {
    EncodingVocab vocab;
    for (const ParsedEntry& e : parse_all(manifest_path)) vocab.observe_score(e.score, e.scale);
    if (vocab.empty()) throw Error(manifest_path.string() + ": corpus contains no notes");
    return vocab;
}

Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const std::optional<EncodingVocab>& vocab, const EncodeOptions& options) {
    std::vector<ParsedEntry> parsed = parse_all(manifest_path);

    Corpus corpus;
    if (vocab) {
        corpus.vocab = *vocab;
    } else {
        for (const ParsedEntry& e : parsed) corpus.vocab.observe_score(e.score, e.scale);
        if (corpus.vocab.empty()) throw Error(manifest_path.string() + ": corpus contains no notes");
    }

    for (const ParsedEntry& e : parsed) {
        auto it = std::find(corpus.composers.begin(), corpus.composers.end(), e.composer);
        int label;
        if (it == corpus.composers.end()) {
            label = static_cast<int>(corpus.composers.size());
            corpus.composers.push_back(e.composer);
        } else {
            label = static_cast<int>(it - corpus.composers.begin());
        }
        LabeledScore ls;
        ls.x = encode_score(e.score, corpus.vocab, e.scale, options);
        ls.label = label;
        ls.spine_count = e.score.spine_count;
        ls.path = e.score.source_path;
        corpus.scores.push_back(std::move(ls));
    }
    return corpus;
}

void save_cache(const std::filesystem::path& path, const Corpus& corpus) {
    std::string out;
    out += "KCC1";
    put_u32(out, 1);  // format version
    put_str(out, corpus.vocab.serialize());
    put_u32(out, static_cast<std::uint32_t>(corpus.composers.size()));
    for (const std::string& c : corpus.composers) put_str(out, c);
    put_u64(out, corpus.scores.size());
    for (const LabeledScore& s : corpus.scores) {
        put_str(out, s.path);
        put_u32(out, static_cast<std::uint32_t>(s.label));
        put_u32(out, static_cast<std::uint32_t>(s.spine_count));
        put_u64(out, static_cast<std::uint64_t>(s.x.rows()));
        put_u32(out, static_cast<std::uint32_t>(s.x.voices()));
        put_u32(out, static_cast<std::uint32_t>(s.x.channels()));
        put_u64(out, s.x.words().size());
        for (std::uint64_t w : s.x.words()) put_u64(out, w);
    }
    detail::atomic_write_file(path, out);
}

Corpus load_cache(const std::filesystem::path& path) {
    std::string data = detail::read_file(path);
    Reader r(data);
    r.need(4);
    if (data.compare(0, 4, "KCC1") != 0) throw IoError(path.string() + ": not a corpus cache");
    r.pos = 4;
    if (r.u32() != 1) throw IoError(path.string() + ": unsupported cache version");

    Corpus corpus;
    corpus.vocab = EncodingVocab::deserialize(r.str());
    std::uint32_t class_count = r.u32();
    for (std::uint32_t i = 0; i < class_count; ++i) corpus.composers.push_back(r.str());

    std::uint64_t score_count = r.u64();
    for (std::uint64_t i = 0; i < score_count; ++i) {
        LabeledScore s;
        s.path = r.str();
        s.label = static_cast<int>(r.u32());
        if (s.label >= static_cast<int>(class_count))
            throw IoError(path.string() + ": label outside the composer table");
        s.spine_count = static_cast<int>(r.u32());
        std::uint64_t rows = r.u64();
        std::uint32_t voices = r.u32();
        std::uint32_t channels = r.u32();
        if (static_cast<int>(voices) != corpus.vocab.voice_count() ||
            static_cast<int>(channels) != corpus.vocab.channel_count())
            throw IoError(path.string() + ": tensor shape does not match the embedded vocabulary");
        BitTensor x(static_cast<int>(rows), static_cast<int>(voices), static_cast<int>(channels));
        std::uint64_t words = r.u64();
        if (words != x.words().size()) throw IoError(path.string() + ": word count mismatch");
        for (std::uint64_t w = 0; w < words; ++w) x.words()[w] = r.u64();
        s.x = std::move(x);
        corpus.scores.push_back(std::move(s));
    }
    if (r.pos != data.size()) throw IoError(path.string() + ": trailing bytes in cache");
    return corpus;
}

}  // namespace kernclass
