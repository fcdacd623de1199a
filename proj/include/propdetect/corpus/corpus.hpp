#pragma once

// Annotation data model and the shared-task file formats.
//
// All offsets in this toolkit are character (codepoint) offsets into the
// decoded article text, never byte offsets — label files ship character
// positions and articles are UTF-8. Article text is decoded once on load and
// kept as UTF-32 so offsets index directly.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "propdetect/util/rng.hpp"

namespace propdetect {

struct Span {
  size_t start = 0;  // inclusive
  size_t end = 0;    // exclusive

  bool operator==(const Span&) const = default;
  size_t length() const { return end - start; }
};

struct Article {
  int64_t id = 0;
  std::u32string text;
};

struct SiLabel {
  int64_t article_id = 0;
  Span span;

  bool operator==(const SiLabel&) const = default;
};

// The 14 technique names of the classification task, index order fixed.
enum class Technique : int {
  appeal_to_authority = 0,
  appeal_to_fear_prejudice,
  bandwagon_reductio_ad_hitlerum,
  black_and_white_fallacy,
  causal_oversimplification,
  doubt,
  exaggeration_minimisation,
  flag_waving,
  loaded_language,
  name_calling_labeling,
  repetition,
  slogans,
  thought_terminating_cliches,
  whataboutism_straw_men,
};

inline constexpr size_t kTechniqueCount = 14;

const char* technique_name(Technique t);
Technique technique_from_index(size_t index);           // BoundsError
Technique technique_from_name(std::string_view name);   // ParseError

struct TcLabel {
  int64_t article_id = 0;
  Technique technique = Technique::appeal_to_authority;
  Span span;

  bool operator==(const TcLabel&) const = default;
};

// One classification instance: a located span plus its exact surface text.
// `technique` is absent at inference time.
struct ClassifiedSample {
  int64_t article_id = 0;
  Span span;
  std::u32string surface;
  std::optional<Technique> technique;
};

// Parses `article<digits>.txt` content. Text is decoded strictly; any
// normalization here would shift gold offsets.
Article load_article(const std::string& file_name, std::string_view content);

// 3-column TSV: article_id \t start \t end.
std::vector<SiLabel> parse_si_labels(std::string_view tsv_text);
std::string emit_si_predictions(const std::vector<SiLabel>& labels);

// 4-column TSV: article_id \t technique \t start \t end.
std::vector<TcLabel> parse_tc_labels(std::string_view tsv_text);
std::string emit_tc_predictions(const std::vector<TcLabel>& labels);

// Checks every label's offsets against the owning article's length.
void validate_against(const std::vector<SiLabel>& labels,
                      const std::vector<Article>& articles);
void validate_against(const std::vector<TcLabel>& labels,
                      const std::vector<Article>& articles);

// Seeded shuffle, then dev takes the last round(n * 74/371) articles.
std::pair<std::vector<Article>, std::vector<Article>> train_dev_split(
    std::vector<Article> articles, uint64_t seed);

// Index form of 50/50 undersampling: keeps every positive, samples
// min(#neg, #pos) negatives without replacement, shuffles the result.
// Throws SamplingError when there are no positives.
std::vector<size_t> undersample_negative_indices(
    const std::vector<bool>& is_positive, uint64_t seed);

template <typename T>
std::vector<T> undersample_negatives(
    const std::vector<std::pair<T, bool>>& items, uint64_t seed) {
  std::vector<bool> is_positive(items.size());
  for (size_t i = 0; i < items.size(); ++i) is_positive[i] = items[i].second;
  auto keep = undersample_negative_indices(is_positive, seed);
  std::vector<T> out;
  out.reserve(keep.size());
  for (size_t i : keep) out.push_back(items[i].first);
  return out;
}

// Replicates every class up to the majority-class count by seeded sampling
// with replacement. Originals come first in input order; replicas follow,
// grouped by class index.
std::vector<ClassifiedSample> oversample_classes(
    const std::vector<ClassifiedSample>& samples, uint64_t seed);

}  // namespace propdetect
