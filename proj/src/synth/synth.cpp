#include "propdetect/synth/synth.hpp"

#include <algorithm>
#include <string>

#include "propdetect/util/errors.hpp"
#include "propdetect/util/rng.hpp"

namespace propdetect {

namespace {

constexpr const char32_t* kFiller[] = {
    U"the",    U"report", U"city",   U"council", U"market",
    U"percent", U"people", U"water",  U"road",    U"season",
    U"game",   U"office", U"letter", U"music",   U"garden",
    U"window", U"harbor", U"meadow", U"signal",  U"valley"};
constexpr size_t kFillerCount = sizeof(kFiller) / sizeof(kFiller[0]);

constexpr const char32_t* kTriggers[kTechniqueCount] = {
    U"authorine",  U"fearevoke", U"bandwagonize", U"dichotomate",
    U"causalize",  U"doubtcast", U"exaggerise",   U"flagwave",
    U"loadword",   U"namebrand", U"repeatium",    U"sloganeer",
    U"clichebomb", U"whataboutery"};

void append_word(std::u32string& text, const char32_t* word) {
  if (!text.empty() && text.back() != U'\n') text += U' ';
  text += word;
}

// n filler words; occasional commas and sentence breaks keep the splitters
// honest. Never touches trigger offsets.
void append_filler(std::u32string& text, size_t n, Rng& rng) {
  for (size_t i = 0; i < n; ++i) {
    append_word(text, kFiller[rng.below(kFillerCount)]);
    uint64_t roll = rng.below(10);
    if (roll == 0)
      text += U',';
    else if (roll == 1)
      text += U'.';
  }
}

}  // namespace

const char32_t* synth_trigger(Technique t) {
  return kTriggers[static_cast<size_t>(t)];
}

SynthCorpus make_synth_corpus(const SynthConfig& cfg) {
  if (cfg.articles == 0)
    throw ContractError("synthetic corpus needs at least one article");
  if (cfg.max_paragraphs == 0)
    throw ContractError("articles need at least one paragraph");

  Rng rng(cfg.seed);
  SynthCorpus out;
  out.articles.reserve(cfg.articles);
  size_t run_counter = 0;

  for (size_t a = 0; a < cfg.articles; ++a) {
    Article article;
    article.id = static_cast<int64_t>(a + 1);
    std::u32string text;

    size_t paragraphs = 1 + rng.below(cfg.max_paragraphs);
    for (size_t p = 0; p < paragraphs; ++p) {
      if (p) text += U"\n\n";
      append_filler(text, 2 + rng.below(3), rng);

      size_t runs = rng.below(cfg.max_runs_per_paragraph + 1);
      for (size_t r = 0; r < runs; ++r) {
        // two full round-robin cycles guarantee class coverage, then skew
        // toward low indices
        size_t tech = run_counter < 2 * kTechniqueCount
                          ? run_counter % kTechniqueCount
                          : std::min(rng.below(kTechniqueCount),
                                     rng.below(kTechniqueCount));
        ++run_counter;

        if (!text.empty() && text.back() != U'\n') text += U' ';
        size_t start = text.size();
        size_t copies = 1 + rng.below(3);
        for (size_t c = 0; c < copies; ++c) {
          if (c) text += U' ';
          text += kTriggers[tech];
        }
        size_t end = text.size();

        Span span{start, end};
        out.si_labels.push_back({article.id, span});
        out.tc_labels.push_back(
            {article.id, technique_from_index(tech), span});

        append_filler(text, 1 + rng.below(3), rng);
      }
      if (text.back() != U'.') text += U'.';
    }

    article.text = std::move(text);
    out.articles.push_back(std::move(article));
  }
  return out;
}

}  // namespace propdetect
