#include "propdetect/corpus/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "propdetect/util/errors.hpp"
#include "propdetect/util/utf8.hpp"

namespace propdetect {

namespace {

constexpr std::array<const char*, kTechniqueCount> kTechniqueNames = {
    "Appeal to Authority",
    "Appeal to fear-prejudice",
    "Bandwagon, Reductio ad hitlerum",
    "Black-and-White Fallacy",
    "Causal Oversimplification",
    "Doubt",
    "Exaggeration, Minimisation",
    "Flag-Waving",
    "Loaded Language",
    "Name Calling, Labeling",
    "Repetition",
    "Slogans",
    "Thought-terminating Cliches",
    "Whataboutism, Straw Men",
};

int64_t parse_int_field(std::string_view field, size_t line_no,
                        const char* what) {
  int64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError("line " + std::to_string(line_no) + ": " + what +
                     " is not an integer: '" + std::string(field) + "'");
  return value;
}

// Splits one line into exactly `n` tab-separated fields.
std::vector<std::string_view> split_fields(std::string_view line,
                                           size_t line_no, size_t n) {
  std::vector<std::string_view> fields;
  size_t pos = 0;
  while (true) {
    size_t tab = line.find('\t', pos);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  if (fields.size() != n)
    throw ParseError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(n) + " tab-separated fields, got " +
                     std::to_string(fields.size()));
  return fields;
}

Span parse_span_fields(std::string_view start_f, std::string_view end_f,
                       size_t line_no) {
  int64_t start = parse_int_field(start_f, line_no, "span start");
  int64_t end = parse_int_field(end_f, line_no, "span end");
  if (start < 0 || end < 0)
    throw ParseError("line " + std::to_string(line_no) +
                     ": span offsets must be nonnegative");
  if (start >= end)
    throw ParseError("line " + std::to_string(line_no) + ": span start " +
                     std::to_string(start) + " must precede end " +
                     std::to_string(end));
  return Span{static_cast<size_t>(start), static_cast<size_t>(end)};
}

int64_t parse_article_id(std::string_view field, size_t line_no) {
  int64_t id = parse_int_field(field, line_no, "article id");
  if (id < 1)
    throw ParseError("line " + std::to_string(line_no) +
                     ": article id must be positive, got " +
                     std::to_string(id));
  return id;
}

// Calls fn(line, 1-based line number) for every nonempty line.
template <typename Fn>
void for_each_line(std::string_view text, Fn fn) {
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    size_t end = (nl == std::string_view::npos) ? text.size() : nl;
    ++line_no;
    if (end > pos) fn(text.substr(pos, end - pos), line_no);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

}  // namespace

const char* technique_name(Technique t) {
  return kTechniqueNames[static_cast<size_t>(t)];
}

Technique technique_from_index(size_t index) {
  if (index >= kTechniqueCount)
    throw BoundsError("technique index " + std::to_string(index) +
                      " out of range [0, 14)");
  return static_cast<Technique>(index);
}

Technique technique_from_name(std::string_view name) {
  for (size_t i = 0; i < kTechniqueCount; ++i)
    if (name == kTechniqueNames[i]) return static_cast<Technique>(i);
  std::string msg = "unknown technique '" + std::string(name) +
                    "'; valid names are: ";
  for (size_t i = 0; i < kTechniqueCount; ++i) {
    if (i) msg += "; ";
    msg += kTechniqueNames[i];
  }
  throw ParseError(msg);
}

Article load_article(const std::string& file_name, std::string_view content) {
  constexpr std::string_view prefix = "article";
  constexpr std::string_view suffix = ".txt";
  bool shaped = file_name.size() > prefix.size() + suffix.size() &&
                file_name.starts_with(prefix) && file_name.ends_with(suffix);
  std::string_view digits;
  if (shaped) {
    digits = std::string_view(file_name).substr(
        prefix.size(), file_name.size() - prefix.size() - suffix.size());
    shaped = !digits.empty() &&
             std::all_of(digits.begin(), digits.end(),
                         [](char c) { return c >= '0' && c <= '9'; });
  }
  if (!shaped)
    throw FormatError("article file name '" + file_name +
                      "' does not match article<digits>.txt");
  int64_t id = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), id);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || id < 1)
    throw FormatError("article file name '" + file_name +
                      "' does not carry a positive article id");
  return Article{id, utf8_decode(content)};
}

std::vector<SiLabel> parse_si_labels(std::string_view tsv_text) {
  std::vector<SiLabel> labels;
  for_each_line(tsv_text, [&](std::string_view line, size_t line_no) {
    auto f = split_fields(line, line_no, 3);
    SiLabel label;
    label.article_id = parse_article_id(f[0], line_no);
    label.span = parse_span_fields(f[1], f[2], line_no);
    labels.push_back(label);
  });
  return labels;
}

std::vector<TcLabel> parse_tc_labels(std::string_view tsv_text) {
  std::vector<TcLabel> labels;
  for_each_line(tsv_text, [&](std::string_view line, size_t line_no) {
    auto f = split_fields(line, line_no, 4);
    TcLabel label;
    label.article_id = parse_article_id(f[0], line_no);
    try {
      label.technique = technique_from_name(f[1]);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    label.span = parse_span_fields(f[2], f[3], line_no);
    labels.push_back(label);
  });
  return labels;
}

std::string emit_si_predictions(const std::vector<SiLabel>& labels) {
  std::string out;
  for (const auto& l : labels) {
    out += std::to_string(l.article_id);
    out += '\t';
    out += std::to_string(l.span.start);
    out += '\t';
    out += std::to_string(l.span.end);
    out += '\n';
  }
  return out;
}

std::string emit_tc_predictions(const std::vector<TcLabel>& labels) {
  std::string out;
  for (const auto& l : labels) {
    out += std::to_string(l.article_id);
    out += '\t';
    out += technique_name(l.technique);
    out += '\t';
    out += std::to_string(l.span.start);
    out += '\t';
    out += std::to_string(l.span.end);
    out += '\n';
  }
  return out;
}

namespace {

void check_label(int64_t article_id, Span span,
                 const std::vector<Article>& articles) {
  for (const auto& a : articles) {
    if (a.id != article_id) continue;
    if (span.end > a.text.size())
      throw BoundsError("label [" + std::to_string(span.start) + ", " +
                        std::to_string(span.end) + ") exceeds article " +
                        std::to_string(article_id) + " length " +
                        std::to_string(a.text.size()));
    return;
  }
  throw BoundsError("label references unknown article " +
                    std::to_string(article_id));
}

}  // namespace

void validate_against(const std::vector<SiLabel>& labels,
                      const std::vector<Article>& articles) {
  for (const auto& l : labels) check_label(l.article_id, l.span, articles);
}

void validate_against(const std::vector<TcLabel>& labels,
                      const std::vector<Article>& articles) {
  for (const auto& l : labels) check_label(l.article_id, l.span, articles);
}

std::pair<std::vector<Article>, std::vector<Article>> train_dev_split(
    std::vector<Article> articles, uint64_t seed) {
  if (articles.empty())
    throw SamplingError("cannot split an empty article list");
  Rng rng(seed);
  rng.shuffle(articles);
  size_t dev_n = static_cast<size_t>(
      std::llround(static_cast<double>(articles.size()) * 74.0 / 371.0));
  size_t train_n = articles.size() - dev_n;
  std::vector<Article> train(std::make_move_iterator(articles.begin()),
                             std::make_move_iterator(articles.begin() + train_n));
  std::vector<Article> dev(std::make_move_iterator(articles.begin() + train_n),
                           std::make_move_iterator(articles.end()));
  return {std::move(train), std::move(dev)};
}

std::vector<size_t> undersample_negative_indices(
    const std::vector<bool>& is_positive, uint64_t seed) {
  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < is_positive.size(); ++i)
    (is_positive[i] ? pos : neg).push_back(i);
  if (pos.empty())
    throw SamplingError(
        "undersampling needs at least one positive segment; got none");
  Rng rng(seed);
  size_t k = std::min(neg.size(), pos.size());
  std::vector<size_t> out = pos;
  for (size_t j : rng.sample_without_replacement(neg.size(), k))
    out.push_back(neg[j]);
  rng.shuffle(out);
  return out;
}

std::vector<ClassifiedSample> oversample_classes(
    const std::vector<ClassifiedSample>& samples, uint64_t seed) {
  if (samples.empty()) throw SamplingError("cannot oversample an empty set");
  std::array<std::vector<size_t>, kTechniqueCount> by_class;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].technique)
      throw SamplingError("oversampling requires labeled samples; sample " +
                          std::to_string(i) + " has no technique");
    by_class[static_cast<size_t>(*samples[i].technique)].push_back(i);
  }
  size_t majority = 0;
  for (const auto& idx : by_class) majority = std::max(majority, idx.size());

  std::vector<ClassifiedSample> out = samples;
  Rng rng(seed);
  for (size_t c = 0; c < kTechniqueCount; ++c) {
    const auto& idx = by_class[c];
    if (idx.empty()) continue;
    for (size_t have = idx.size(); have < majority; ++have)
      out.push_back(samples[idx[rng.below(idx.size())]]);
  }
  return out;
}

}  // namespace propdetect
