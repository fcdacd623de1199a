#pragma once

// Offset-exact tokenization, the text-splitting strategies, and the
// span <-> token-label projections that connect character-level annotations
// to sequence taggers.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "propdetect/corpus/corpus.hpp"

namespace propdetect {

// Word characters form word tokens; every other non-whitespace character is
// a single punctuation token. Non-ASCII codepoints count as word characters
// (the tokenizer does not classify Unicode beyond this).
inline bool is_word_char(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
         (c >= U'0' && c <= U'9') || c >= 0x80;
}

inline bool is_ascii_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' ||
         c == U'\f';
}

struct Token {
  std::string surface;  // UTF-8, ASCII-lowercased
  size_t start = 0;     // character offsets into the owning article
  size_t end = 0;

  bool operator==(const Token&) const = default;
};

struct Segment {
  int64_t article_id = 0;
  size_t start = 0;  // character extent of the segment's tokens
  size_t end = 0;
  std::vector<Token> tokens;
};

// One 0/1 label per token of a Segment.
using TokenLabelSeq = std::vector<int>;

// Maximal runs of word characters (lowercased) plus single-character
// punctuation tokens, with exact character offsets.
std::vector<Token> rule_tokenize(std::u32string_view text);

// Surface -> id table with fixed reserved ids. Ids 3+ are assigned to the
// most frequent surfaces of the corpus it was built from.
class Vocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kMaskId = 2;
  static constexpr size_t kReserved = 3;

  Vocab();

  // Keeps the (max_size - 3) most frequent token surfaces, ties broken
  // lexicographically. max_size counts the reserved ids.
  static Vocab build(const std::vector<Article>& articles, size_t max_size);

  // One surface per line after a comment header; line order defines ids.
  static Vocab from_file(std::string_view text);
  std::string to_file() const;

  int id_of(const std::string& surface) const;  // kUnkId when absent
  const std::string& surface_of(int id) const;  // BoundsError
  size_t size() const { return id_to_surface_.size(); }

 private:
  std::vector<std::string> id_to_surface_;
  std::unordered_map<std::string, int> surface_to_id_;

  void append(const std::string& surface);  // ParseError on duplicates
};

// Deterministic text -> tokens with a declared vocabulary.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<Token> tokenize(std::u32string_view text) const = 0;
  virtual const Vocab& vocab() const = 0;
};

class RuleTokenizer : public Tokenizer {
 public:
  explicit RuleTokenizer(Vocab vocab) : vocab_(std::move(vocab)) {}
  std::vector<Token> tokenize(std::u32string_view text) const override {
    return rule_tokenize(text);
  }
  const Vocab& vocab() const override { return vocab_; }

 private:
  Vocab vocab_;
};

// Splits at newline runs, then cuts any paragraph that exceeds max_tokens
// after the last punctuation token in the window (hard cut when the window
// has no punctuation). No produced segment exceeds max_tokens tokens.
std::vector<Segment> split_paragraphs(const Article& article,
                                      const Tokenizer& tok,
                                      size_t max_tokens = 128);

// Splits after '.', '!' or '?' followed by whitespace-or-end, and at newline
// runs. Overlong sentences fall back to the paragraph cut rule.
std::vector<Segment> split_sentences(const Article& article,
                                     const Tokenizer& tok,
                                     size_t max_tokens = 128);

// One classification sample per label, surface sliced verbatim.
std::vector<ClassifiedSample> extract_exact_spans(
    const Article& article, const std::vector<TcLabel>& labels);

// Token i is labeled 1 iff it overlaps any gold span by >= 1 character.
TokenLabelSeq project_labels(const Segment& segment,
                             const std::vector<Span>& gold);

// Maximal 1-runs become spans over token extents, then spans separated by
// gaps with no word character are merged.
std::vector<Span> reconstruct_spans(const Article& article,
                                    const Segment& segment,
                                    const TokenLabelSeq& labels);

// The merge half of reconstruct_spans, reusable across segment boundaries.
// Requires spans sorted by start; returns a sorted, merged list.
std::vector<Span> merge_adjacent_spans(const std::u32string& text,
                                       std::vector<Span> spans);

}  // namespace propdetect
