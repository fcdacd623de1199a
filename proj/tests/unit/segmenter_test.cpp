#include <string>
#include <vector>

#include "doctest.h"
#include "propdetect/segmenter/segmenter.hpp"
#include "propdetect/util/errors.hpp"
#include "propdetect/util/rng.hpp"
#include "propdetect/util/utf8.hpp"

using namespace propdetect;

namespace {

Article art(const std::string& utf8, int64_t id = 1) {
  return Article{id, utf8_decode(utf8)};
}

RuleTokenizer plain_tokenizer() { return RuleTokenizer(Vocab{}); }

std::vector<std::string> surfaces(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.surface);
  return out;
}

}  // namespace

TEST_CASE("rule_tokenize splits words and punctuation with exact offsets") {
  auto toks = rule_tokenize(utf8_decode("Hello, world!"));
  REQUIRE(toks.size() == 4);
  CHECK(toks[0] == Token{"hello", 0, 5});
  CHECK(toks[1] == Token{",", 5, 6});
  CHECK(toks[2] == Token{"world", 7, 12});
  CHECK(toks[3] == Token{"!", 12, 13});

  CHECK(rule_tokenize(U"").empty());

  auto one = rule_tokenize(utf8_decode("  a  "));
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Token{"a", 2, 3});
}

TEST_CASE("rule_tokenize keeps letter-digit runs together") {
  auto toks = rule_tokenize(utf8_decode("x9y 2nd a-b"));
  CHECK(surfaces(toks) ==
        std::vector<std::string>{"x9y", "2nd", "a", "-", "b"});
}

TEST_CASE("rule_tokenize treats non-ascii as word characters") {
  auto toks = rule_tokenize(utf8_decode("Caf\xc3\xa9 \xc3\xb1o!"));
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].surface == "caf\xc3\xa9");  // ASCII-only casefold
  CHECK(toks[0].start == 0);
  CHECK(toks[0].end == 4);  // character offsets, not bytes
  CHECK(toks[1].surface == "\xc3\xb1o");
  CHECK(toks[2].surface == "!");
}

TEST_CASE("token offsets reproduce the source text up to casefolding") {
  Article a = art("It's 2020; T-cells? \xc3\x89lan... (very) good.");
  for (const auto& t : rule_tokenize(a.text)) {
    std::u32string slice = a.text.substr(t.start, t.end - t.start);
    for (auto& c : slice)
      if (c >= U'A' && c <= U'Z') c += 32;
    CHECK(utf8_encode(slice) == t.surface);
  }
}

TEST_CASE("vocab assigns reserved ids then frequency-ranked surfaces") {
  // "b" x3, "a" x2, "c" x1; tie between none
  std::vector<Article> arts = {art("b a b", 1), art("b a c", 2)};
  Vocab v = Vocab::build(arts, 100);
  CHECK(v.size() == 6);
  CHECK(v.id_of("<pad>") == 0);
  CHECK(v.id_of("<unk>") == 1);
  CHECK(v.id_of("<mask>") == 2);
  CHECK(v.id_of("b") == 3);
  CHECK(v.id_of("a") == 4);
  CHECK(v.id_of("c") == 5);
  CHECK(v.id_of("zzz") == Vocab::kUnkId);
  CHECK(v.surface_of(3) == "b");
  CHECK_THROWS_AS(v.surface_of(6), BoundsError);
  CHECK_THROWS_AS(v.surface_of(-1), BoundsError);
}

TEST_CASE("vocab caps size and breaks frequency ties lexicographically") {
  std::vector<Article> arts = {art("z y x w", 1)};  // all count 1
  Vocab v = Vocab::build(arts, 5);  // room for 2 surfaces
  CHECK(v.size() == 5);
  CHECK(v.id_of("w") == 3);
  CHECK(v.id_of("x") == 4);
  CHECK(v.id_of("y") == Vocab::kUnkId);
  CHECK_THROWS_AS(Vocab::build(arts, 2), ContractError);
}

TEST_CASE("vocab file round trip and formats") {
  Vocab v = Vocab::build({art("alpha beta alpha")}, 10);
  std::string text = v.to_file();
  CHECK(text.starts_with("#"));
  Vocab back = Vocab::from_file(text);
  CHECK(back.size() == v.size());
  CHECK(back.id_of("alpha") == v.id_of("alpha"));
  CHECK(back.id_of("beta") == v.id_of("beta"));

  CHECK_THROWS_AS(Vocab::from_file("<pad>\n<unk>\n<mask>\n"), ParseError);
  CHECK_THROWS_AS(Vocab::from_file("# v1\n<pad>\n<mask>\n<unk>\n"),
                  ParseError);
  CHECK_THROWS_AS(Vocab::from_file("# v1\n<pad>\n<unk>\n<mask>\na\na\n"),
                  ParseError);
}

TEST_CASE("split_paragraphs backtracks to the last punctuation token") {
  auto tok = plain_tokenizer();
  // tokens: a b c d , e f g .  -> cut after ',' (position 5 of 5)
  Article a = art("a b c d, e f g.");
  auto segs = split_paragraphs(a, tok, 5);
  REQUIRE(segs.size() == 2);
  CHECK(surfaces(segs[0].tokens) ==
        std::vector<std::string>{"a", "b", "c", "d", ","});
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 8);
  CHECK(surfaces(segs[1].tokens) ==
        std::vector<std::string>{"e", "f", "g", "."});
  CHECK(segs[1].start == 9);
  CHECK(segs[1].end == 15);
}

TEST_CASE("split_paragraphs hard-cuts when the window has no punctuation") {
  auto tok = plain_tokenizer();
  auto segs = split_paragraphs(art("a b c d e f"), tok, 5);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].tokens.size() == 5);
  CHECK(surfaces(segs[1].tokens) == std::vector<std::string>{"f"});
}

TEST_CASE("split_paragraphs leaves short paragraphs alone") {
  auto tok = plain_tokenizer();
  auto segs = split_paragraphs(art("short one."), tok, 128);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].tokens.size() == 3);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 10);
}

TEST_CASE("split_paragraphs separates paragraphs at newline runs") {
  auto tok = plain_tokenizer();
  auto segs = split_paragraphs(art("one two\n\nthree\nfour five"), tok, 128);
  REQUIRE(segs.size() == 3);
  CHECK(surfaces(segs[0].tokens) == std::vector<std::string>{"one", "two"});
  CHECK(surfaces(segs[1].tokens) == std::vector<std::string>{"three"});
  CHECK(surfaces(segs[2].tokens) == std::vector<std::string>{"four", "five"});
  CHECK(segs[2].start == 15);
}

TEST_CASE("split_paragraphs recurses over long paragraphs") {
  auto tok = plain_tokenizer();
  // 12 word tokens with commas after the 4th and 8th
  Article a = art("w w w w, w w w w, w w w w");
  auto segs = split_paragraphs(a, tok, 5);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].tokens.size() == 5);  // w w w w ,
  CHECK(segs[1].tokens.size() == 5);  // w w w w ,
  CHECK(segs[2].tokens.size() == 4);  // w w w w
}

TEST_CASE("split_paragraphs enforces its precondition and the cap") {
  auto tok = plain_tokenizer();
  CHECK_THROWS_AS(split_paragraphs(art("a"), tok, 1), ContractError);

  Rng rng(8);
  std::string text;
  for (int i = 0; i < 500; ++i) {
    switch (rng.below(8)) {
      case 0: text += ", "; break;
      case 1: text += ". "; break;
      case 2: text += "\n"; break;
      default: text += "word ";
    }
  }
  Article a = art(text);
  auto segs = split_paragraphs(a, tok, 16);
  std::vector<Token> all;
  for (const auto& s : segs) {
    CHECK(s.tokens.size() <= 16);
    CHECK(!s.tokens.empty());
    CHECK(s.start == s.tokens.front().start);
    CHECK(s.end == s.tokens.back().end);
    all.insert(all.end(), s.tokens.begin(), s.tokens.end());
  }
  // segments exactly partition the article's tokenization, in order
  CHECK(all == rule_tokenize(a.text));
}

TEST_CASE("split_sentences cuts after terminators followed by space") {
  auto tok = plain_tokenizer();
  auto segs = split_sentences(art("A b. C d!"), tok);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 4);
  CHECK(segs[1].start == 5);
  CHECK(segs[1].end == 9);
}

TEST_CASE("split_sentences edge forms") {
  auto tok = plain_tokenizer();
  CHECK(split_sentences(art("No terminator"), tok).size() == 1);

  // no abbreviation list: "e.g." ends a sentence (documented limitation)
  auto segs = split_sentences(art("e.g. test"), tok);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].end == 4);
  CHECK(segs[1].start == 5);

  CHECK(split_sentences(art("A. B? C!"), tok).size() == 3);
  CHECK(split_sentences(art("A b\nC d"), tok).size() == 2);
  CHECK(split_sentences(art("pi is 3.14 ok"), tok).size() == 1);
  CHECK(split_sentences(art("Really?! Yes."), tok).size() == 2);
  CHECK(split_sentences(art(""), tok).empty());
}

TEST_CASE("split_sentences falls back to the cut rule on long sentences") {
  auto tok = plain_tokenizer();
  Article a = art("q q q q, q q q q q");  // 10 tokens, no terminator
  auto segs = split_sentences(a, tok, 5);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].tokens.size() == 5);
  CHECK(segs[1].tokens.size() == 5);
}

TEST_CASE("extract_exact_spans slices surfaces verbatim") {
  Article a = art("abcdef");
  auto samples = extract_exact_spans(
      a, {{1, Technique::doubt, {1, 4}}, {1, Technique::slogans, {0, 4}},
          {1, Technique::doubt, {2, 6}}});
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].surface == U"bcd");
  CHECK(samples[1].surface == U"abcd");
  CHECK(samples[2].surface == U"cdef");  // overlaps preserved
  CHECK(samples[0].technique == Technique::doubt);

  CHECK(extract_exact_spans(a, {}).empty());

  try {
    extract_exact_spans(a, {{1, Technique::doubt, {2, 9}}});
    FAIL("expected BoundsError");
  } catch (const BoundsError& e) {
    CHECK(std::string(e.what()).find("Doubt") != std::string::npos);
  }
}

TEST_CASE("project_labels marks any-overlap tokens") {
  Article a = art("hello world");
  Segment seg = split_paragraphs(a, plain_tokenizer()).at(0);
  REQUIRE(seg.tokens.size() == 2);

  CHECK(project_labels(seg, {{8, 20}}) == TokenLabelSeq{0, 1});
  CHECK(project_labels(seg, {}) == TokenLabelSeq{0, 0});
  CHECK(project_labels(seg, {{0, 2}}) == TokenLabelSeq{1, 0});  // half a token
  CHECK(project_labels(seg, {{4, 7}}) == TokenLabelSeq{1, 1});
}

TEST_CASE("reconstruct_spans extracts 1-runs over token extents") {
  Article a = art("ab cd ef gh");
  Segment seg = split_paragraphs(a, plain_tokenizer()).at(0);
  REQUIRE(seg.tokens.size() == 4);

  auto spans = reconstruct_spans(a, seg, {0, 1, 1, 0});
  CHECK(spans == std::vector<Span>{{3, 8}});
  CHECK(reconstruct_spans(a, seg, {0, 0, 0, 0}).empty());
  CHECK(reconstruct_spans(a, seg, {1, 0, 0, 1}) ==
        std::vector<Span>{{0, 2}, {9, 11}});
  CHECK_THROWS_AS(reconstruct_spans(a, seg, {1, 0}), ContractError);
}

TEST_CASE("reconstruct_spans merges runs across non-word gaps") {
  Article a = art("aa bb, cc");
  Segment seg = split_paragraphs(a, plain_tokenizer()).at(0);
  REQUIRE(seg.tokens.size() == 4);  // aa bb , cc

  // bb and cc labeled, the comma between them is not
  auto spans = reconstruct_spans(a, seg, {0, 1, 0, 1});
  CHECK(spans == std::vector<Span>{{3, 9}});

  // a word token in the gap blocks the merge
  Article b = art("aa bb x cc");
  Segment segb = split_paragraphs(b, plain_tokenizer()).at(0);
  CHECK(reconstruct_spans(b, segb, {0, 1, 0, 1}) ==
        std::vector<Span>{{3, 5}, {8, 10}});
}

TEST_CASE("merge_adjacent_spans joins touching and gap-only spans") {
  std::u32string text = U"aa bb, cc dd";
  CHECK(merge_adjacent_spans(text, {{0, 2}, {2, 5}}) ==
        std::vector<Span>{{0, 5}});
  CHECK(merge_adjacent_spans(text, {{0, 2}, {3, 5}}) ==
        std::vector<Span>{{0, 5}});  // space gap
  CHECK(merge_adjacent_spans(text, {{3, 5}, {7, 9}}) ==
        std::vector<Span>{{3, 9}});  // ", " gap
  CHECK(merge_adjacent_spans(text, {{3, 5}, {10, 12}}) ==
        std::vector<Span>{{3, 5}, {10, 12}});  // "cc" intervenes
  CHECK(merge_adjacent_spans(text, {}).empty());
}

TEST_CASE("projection and reconstruction round trip on aligned gold") {
  Article a = art("one two three, four five. six seven");
  Segment seg = split_paragraphs(a, plain_tokenizer()).at(0);
  // gold aligned to token extents: "two three" and "four"
  std::vector<Span> gold = {{4, 13}, {15, 19}};
  auto labels = project_labels(seg, gold);
  auto back = reconstruct_spans(a, seg, labels);
  // the ", " gap between the two gold spans has no word character, so the
  // round trip returns their merge
  CHECK(back == std::vector<Span>{{4, 19}});

  std::vector<Span> separated = {{0, 3}, {24, 25}};  // "one" and "."
  CHECK(reconstruct_spans(a, seg, project_labels(seg, separated)) ==
        std::vector<Span>{{0, 3}, {24, 25}});
}
