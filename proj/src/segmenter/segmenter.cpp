#include "propdetect/segmenter/segmenter.hpp"

#include <algorithm>

#include "propdetect/util/errors.hpp"
#include "propdetect/util/utf8.hpp"

namespace propdetect {

std::vector<Token> rule_tokenize(std::u32string_view text) {
  std::vector<Token> tokens;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    char32_t c = text[i];
    if (is_ascii_space(c)) {
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      size_t start = i;
      std::u32string run;
      while (i < n && is_word_char(text[i])) {
        char32_t w = text[i];
        if (w >= U'A' && w <= U'Z') w += 32;  // ASCII-only casefold
        run.push_back(w);
        ++i;
      }
      tokens.push_back({utf8_encode(run), start, i});
    } else {
      tokens.push_back({utf8_encode(c), i, i + 1});
      ++i;
    }
  }
  return tokens;
}

Vocab::Vocab() {
  append("<pad>");
  append("<unk>");
  append("<mask>");
}

void Vocab::append(const std::string& surface) {
  auto [it, inserted] =
      surface_to_id_.emplace(surface, static_cast<int>(id_to_surface_.size()));
  if (!inserted)
    throw ParseError("duplicate vocabulary surface '" + surface + "'");
  id_to_surface_.push_back(surface);
}

Vocab Vocab::build(const std::vector<Article>& articles, size_t max_size) {
  if (max_size < kReserved)
    throw ContractError("vocabulary size must be at least " +
                        std::to_string(kReserved));
  std::unordered_map<std::string, size_t> counts;
  for (const auto& a : articles)
    for (const auto& t : rule_tokenize(a.text)) ++counts[t.surface];

  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(),
                                                     counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  size_t keep = std::min(ranked.size(), max_size - kReserved);
  for (size_t i = 0; i < keep; ++i) v.append(ranked[i].first);
  return v;
}

Vocab Vocab::from_file(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    size_t end = (nl == std::string_view::npos) ? text.size() : nl;
    lines.push_back(text.substr(pos, end - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (lines.empty() || lines[0].empty() || lines[0][0] != '#')
    throw ParseError("vocabulary file must start with a '#' header line");
  if (lines.size() < 4 || lines[1] != "<pad>" || lines[2] != "<unk>" ||
      lines[3] != "<mask>")
    throw ParseError(
        "vocabulary header must be followed by <pad>, <unk>, <mask> "
        "(ids 0, 1, 2)");

  Vocab v;
  for (size_t i = 4; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      if (i + 1 == lines.size()) break;  // trailing newline
      throw ParseError("line " + std::to_string(i + 1) +
                       ": empty vocabulary surface");
    }
    try {
      v.append(std::string(lines[i]));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return v;
}

std::string Vocab::to_file() const {
  std::string out = "# vocabulary v1; ids by line: 0=<pad> 1=<unk> 2=<mask>\n";
  for (const auto& s : id_to_surface_) {
    out += s;
    out += '\n';
  }
  return out;
}

int Vocab::id_of(const std::string& surface) const {
  auto it = surface_to_id_.find(surface);
  return it == surface_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocab::surface_of(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= id_to_surface_.size())
    throw BoundsError("vocabulary id " + std::to_string(id) +
                      " out of range [0, " +
                      std::to_string(id_to_surface_.size()) + ")");
  return id_to_surface_[static_cast<size_t>(id)];
}

namespace {

bool is_punct_token(const Article& article, const Token& t) {
  return t.end - t.start == 1 && !is_word_char(article.text[t.start]);
}

Segment make_segment(const Article& article, const std::vector<Token>& tokens,
                     size_t first, size_t last) {
  Segment s;
  s.article_id = article.id;
  s.start = tokens[first].start;
  s.end = tokens[last - 1].end;
  s.tokens.assign(tokens.begin() + static_cast<ptrdiff_t>(first),
                  tokens.begin() + static_cast<ptrdiff_t>(last));
  return s;
}

// Cuts tokens[0..n) after the last punctuation token within each max_tokens
// window, falling back to a hard cut, and appends the resulting segments.
void cut_into_segments(const Article& article,
                       const std::vector<Token>& tokens, size_t max_tokens,
                       std::vector<Segment>& out) {
  size_t begin = 0;
  while (tokens.size() - begin > max_tokens) {
    size_t cut = begin + max_tokens;  // hard-cut default: exactly max_tokens
    for (size_t i = begin + max_tokens; i > begin; --i) {
      if (is_punct_token(article, tokens[i - 1])) {
        cut = i;
        break;
      }
    }
    out.push_back(make_segment(article, tokens, begin, cut));
    begin = cut;
  }
  if (begin < tokens.size())
    out.push_back(make_segment(article, tokens, begin, tokens.size()));
}

std::vector<Token> tokenize_slice(const Article& article, const Tokenizer& tok,
                                  size_t start, size_t end) {
  auto tokens = tok.tokenize(
      std::u32string_view(article.text).substr(start, end - start));
  for (auto& t : tokens) {
    t.start += start;
    t.end += start;
  }
  return tokens;
}

}  // namespace

std::vector<Segment> split_paragraphs(const Article& article,
                                      const Tokenizer& tok,
                                      size_t max_tokens) {
  if (max_tokens < 2)
    throw ContractError("max_tokens must be at least 2, got " +
                        std::to_string(max_tokens));
  std::vector<Segment> out;
  const auto& text = article.text;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == U'\n') {
      ++i;
      continue;
    }
    size_t start = i;
    while (i < text.size() && text[i] != U'\n') ++i;
    auto tokens = tokenize_slice(article, tok, start, i);
    if (!tokens.empty()) cut_into_segments(article, tokens, max_tokens, out);
  }
  return out;
}

std::vector<Segment> split_sentences(const Article& article,
                                     const Tokenizer& tok, size_t max_tokens) {
  if (max_tokens < 2)
    throw ContractError("max_tokens must be at least 2, got " +
                        std::to_string(max_tokens));
  std::vector<Segment> out;
  const auto& text = article.text;
  const size_t n = text.size();
  size_t start = 0;
  auto flush = [&](size_t end) {
    if (end > start) {
      auto tokens = tokenize_slice(article, tok, start, end);
      if (!tokens.empty()) cut_into_segments(article, tokens, max_tokens, out);
    }
  };
  for (size_t i = 0; i < n; ++i) {
    char32_t c = text[i];
    if (c == U'\n') {
      flush(i);
      start = i + 1;
    } else if ((c == U'.' || c == U'!' || c == U'?') &&
               (i + 1 == n || is_ascii_space(text[i + 1]))) {
      flush(i + 1);
      start = i + 1;
    }
  }
  flush(n);
  return out;
}

std::vector<ClassifiedSample> extract_exact_spans(
    const Article& article, const std::vector<TcLabel>& labels) {
  std::vector<ClassifiedSample> samples;
  samples.reserve(labels.size());
  for (const auto& l : labels) {
    if (l.span.end > article.text.size())
      throw BoundsError("technique label '" +
                        std::string(technique_name(l.technique)) + "' [" +
                        std::to_string(l.span.start) + ", " +
                        std::to_string(l.span.end) + ") exceeds article " +
                        std::to_string(article.id) + " length " +
                        std::to_string(article.text.size()));
    ClassifiedSample s;
    s.article_id = l.article_id;
    s.span = l.span;
    s.surface = article.text.substr(l.span.start, l.span.length());
    s.technique = l.technique;
    samples.push_back(std::move(s));
  }
  return samples;
}

TokenLabelSeq project_labels(const Segment& segment,
                             const std::vector<Span>& gold) {
  TokenLabelSeq labels(segment.tokens.size(), 0);
  for (size_t i = 0; i < segment.tokens.size(); ++i) {
    const Token& t = segment.tokens[i];
    for (const Span& g : gold) {
      if (t.start < g.end && g.start < t.end) {
        labels[i] = 1;
        break;
      }
    }
  }
  return labels;
}

std::vector<Span> merge_adjacent_spans(const std::u32string& text,
                                       std::vector<Span> spans) {
  std::vector<Span> merged;
  for (const Span& s : spans) {
    if (!merged.empty()) {
      Span& prev = merged.back();
      if (s.start <= prev.end) {  // touching or overlapping
        prev.end = std::max(prev.end, s.end);
        continue;
      }
      bool has_word = false;
      for (size_t i = prev.end; i < s.start; ++i)
        if (is_word_char(text[i])) {
          has_word = true;
          break;
        }
      if (!has_word) {
        prev.end = s.end;
        continue;
      }
    }
    merged.push_back(s);
  }
  return merged;
}

std::vector<Span> reconstruct_spans(const Article& article,
                                    const Segment& segment,
                                    const TokenLabelSeq& labels) {
  if (labels.size() != segment.tokens.size())
    throw ContractError("label sequence length " +
                        std::to_string(labels.size()) +
                        " does not match token count " +
                        std::to_string(segment.tokens.size()));
  std::vector<Span> runs;
  size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] != 1) {
      ++i;
      continue;
    }
    size_t first = i;
    while (i < labels.size() && labels[i] == 1) ++i;
    runs.push_back(
        {segment.tokens[first].start, segment.tokens[i - 1].end});
  }
  return merge_adjacent_spans(article.text, std::move(runs));
}

}  // namespace propdetect
