#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kernclass/corpus.hpp"
#include "kernclass/errors.hpp"
#include "support/synth_corpus.hpp"

using namespace kernclass;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("kc_corpus_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { kcsupport::write_text(p, text); }

}  // namespace

TEST_CASE("manifest parsing: fields, comments, defaults, lowercasing") {
    TempDir tmp;
    write(tmp.path / "a.krn", "**kern\n4c\n*-\n");
    write(tmp.path / "b.krn", "**kern\n4d\n*-\n");
    write(tmp.path / "m.tsv",
          "# comment line\n"
          "\n"
          "a.krn\tBach\t1/1\n"
          "b.krn\tdufay\t1/4\n");
    auto entries = load_manifest(tmp.path / "m.tsv");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].composer == "bach");
    CHECK(entries[0].scale == Rational(1, 1));
    CHECK(entries[0].path == tmp.path / "a.krn");
    CHECK(entries[1].composer == "dufay");
    CHECK(entries[1].scale == Rational(1, 4));
}

TEST_CASE("manifest scale defaults to one when omitted") {
    TempDir tmp;
    write(tmp.path / "a.krn", "**kern\n4c\n*-\n");
    write(tmp.path / "m.tsv", "a.krn\tbach\n");
    auto entries = load_manifest(tmp.path / "m.tsv");
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].scale == Rational(1, 1));
}

TEST_CASE("manifest wildcards expand in sorted order") {
    TempDir tmp;
    write(tmp.path / "q2.krn", "**kern\n4d\n*-\n");
    write(tmp.path / "q1.krn", "**kern\n4c\n*-\n");
    write(tmp.path / "other.krn", "**kern\n4e\n*-\n");
    write(tmp.path / "m.tsv", "q*.krn\thaydn\t1/1\n");
    auto entries = load_manifest(tmp.path / "m.tsv");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].path.filename() == "q1.krn");
    CHECK(entries[1].path.filename() == "q2.krn");
}

TEST_CASE("malformed manifests are rejected") {
    TempDir tmp;
    write(tmp.path / "a.krn", "**kern\n4c\n*-\n");
    write(tmp.path / "one_field.tsv", "a.krn\n");
    CHECK_THROWS_AS(load_manifest(tmp.path / "one_field.tsv"), IoError);
    write(tmp.path / "bad_scale.tsv", "a.krn\tbach\tnot_a_number\n");
    CHECK_THROWS_AS(load_manifest(tmp.path / "bad_scale.tsv"), IoError);
    write(tmp.path / "zero_scale.tsv", "a.krn\tbach\t0\n");
    CHECK_THROWS_AS(load_manifest(tmp.path / "zero_scale.tsv"), IoError);
    write(tmp.path / "no_match.tsv", "zzz*.krn\tbach\n");
    CHECK_THROWS_AS(load_manifest(tmp.path / "no_match.tsv"), IoError);
    CHECK_THROWS_AS(load_manifest(tmp.path / "missing.tsv"), IoError);
}

TEST_CASE("corpus labels follow manifest first-encounter order") {
    TempDir tmp;
    write(tmp.path / "a.krn", "**kern\n4c\n*-\n");
    write(tmp.path / "b.krn", "**kern\n4d\n*-\n");
    write(tmp.path / "c.krn", "**kern\n4e\n*-\n");
    write(tmp.path / "m.tsv",
          "a.krn\thaydn\n"
          "b.krn\tmozart\n"
          "c.krn\tHaydn\n");
    Corpus corpus = load_corpus(tmp.path / "m.tsv");
    REQUIRE(corpus.composers == std::vector<std::string>{"haydn", "mozart"});
    CHECK(corpus.labels() == std::vector<int>{0, 1, 0});
    CHECK(corpus.class_counts() == std::vector<int>{2, 1});
    CHECK(corpus.vocab.voice_count() == 1);
    CHECK(corpus.scores[0].x.rows() == 1);
}

TEST_CASE("per-file parse failures are aggregated with paths") {
    TempDir tmp;
    write(tmp.path / "good.krn", "**kern\n4c\n*-\n");
    write(tmp.path / "bad1.krn", "**kern\n4c 4r\n*-\n");
    write(tmp.path / "bad2.krn", "**kern\nzz\n*-\n");
    write(tmp.path / "m.tsv",
          "good.krn\tbach\n"
          "bad1.krn\tbach\n"
          "bad2.krn\tbach\n");
    try {
        load_corpus(tmp.path / "m.tsv");
        FAIL("expected Error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("2 score(s) failed") != std::string::npos);
        CHECK(msg.find("bad1.krn") != std::string::npos);
        CHECK(msg.find("bad2.krn") != std::string::npos);
        CHECK(msg.find("good.krn") == std::string::npos);
    }
}

TEST_CASE("empty manifests are rejected") {
    TempDir tmp;
    write(tmp.path / "m.tsv", "# nothing here\n");
    CHECK_THROWS_AS(load_corpus(tmp.path / "m.tsv"), IoError);
}

TEST_CASE("an explicit vocabulary is used verbatim") {
    TempDir tmp;
    write(tmp.path / "a.krn", "**kern\n4c\n*-\n");
    write(tmp.path / "m.tsv", "a.krn\tbach\n");
    EncodingVocab v;
    v.set_pitch_range(0, 77);
    v.observe_voices(4);
    v.add(Rational(1, 2));
    v.add(Rational(1, 4));
    Corpus corpus = load_corpus(tmp.path / "m.tsv", v);
    CHECK(corpus.vocab == v);
    CHECK(corpus.scores[0].x.voices() == 4);
    CHECK(corpus.scores[0].x.get(0, 0, 78 + 1));  // 1/4 at index 1 in this vocab
}

TEST_CASE("synthetic corpus generator produces the advertised structure") {
    TempDir tmp;
    auto manifest = kcsupport::write_synth_corpus(tmp.path, {"upward", "downward", "chordal"}, 4, 12);
    Corpus corpus = load_corpus(manifest);
    REQUIRE(corpus.composers == std::vector<std::string>{"upward", "downward", "chordal"});
    REQUIRE(corpus.scores.size() == 12);
    CHECK(corpus.class_counts() == std::vector<int>{4, 4, 4});
    for (const LabeledScore& s : corpus.scores) CHECK(s.x.rows() == 12);

    // downward_i is the exact row reversal of upward_i: bag-of-rows summaries
    // match, row sequences do not.
    const BitTensor& up = corpus.scores[0].x;
    const BitTensor& down = corpus.scores[4].x;
    REQUIRE(up.rows() == down.rows());
    bool reversed_equal = true, forward_equal = true;
    for (int t = 0; t < up.rows(); ++t)
        for (int p = 0; p < up.voices(); ++p)
            for (int m = 0; m < up.channels(); ++m) {
                if (up.get(t, p, m) != down.get(up.rows() - 1 - t, p, m)) reversed_equal = false;
                if (up.get(t, p, m) != down.get(t, p, m)) forward_equal = false;
            }
    CHECK(reversed_equal);
    CHECK(!forward_equal);
}

TEST_CASE("corpus cache round-trips losslessly") {
    TempDir tmp;
    auto manifest = kcsupport::write_synth_corpus(tmp.path, {"upward", "chordal"}, 3, 10);
    Corpus corpus = load_corpus(manifest);
    fs::path cache = tmp.path / "corpus.kcc";
    save_cache(cache, corpus);

    Corpus back = load_cache(cache);
    CHECK(back.composers == corpus.composers);
    CHECK(back.vocab == corpus.vocab);
    REQUIRE(back.scores.size() == corpus.scores.size());
    for (std::size_t i = 0; i < corpus.scores.size(); ++i) {
        CHECK(back.scores[i].x == corpus.scores[i].x);
        CHECK(back.scores[i].label == corpus.scores[i].label);
        CHECK(back.scores[i].spine_count == corpus.scores[i].spine_count);
        CHECK(back.scores[i].path == corpus.scores[i].path);
    }
}

TEST_CASE("corrupt caches are rejected") {
    TempDir tmp;
    auto manifest = kcsupport::write_synth_corpus(tmp.path, {"upward"}, 2, 6);
    Corpus corpus = load_corpus(manifest);
    fs::path cache = tmp.path / "corpus.kcc";
    save_cache(cache, corpus);

    std::string data;
    {
        std::ifstream in(cache, std::ios::binary);
        data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    write(tmp.path / "bad_magic.kcc", "XXXX" + data.substr(4));
    CHECK_THROWS_AS(load_cache(tmp.path / "bad_magic.kcc"), IoError);

    write(tmp.path / "truncated.kcc", data.substr(0, data.size() / 2));
    CHECK_THROWS_AS(load_cache(tmp.path / "truncated.kcc"), IoError);

    write(tmp.path / "trailing.kcc", data + "junk");
    CHECK_THROWS_AS(load_cache(tmp.path / "trailing.kcc"), IoError);
}
