#pragma once

// Seeded generator for a fully separable benchmark corpus: propaganda spans
// are maximal runs of technique-specific trigger words, so a correct tagger
// and classifier can reach F1 = 1.0. Used by the `synth` command and the
// end-to-end checks.

#include <cstdint>
#include <vector>

#include "propdetect/corpus/corpus.hpp"

namespace propdetect {

struct SynthConfig {
  size_t articles = 200;
  size_t max_paragraphs = 3;       // 1..max per article
  size_t max_runs_per_paragraph = 2;  // 0..max trigger runs
  uint64_t seed = 0;
};

struct SynthCorpus {
  std::vector<Article> articles;
  std::vector<SiLabel> si_labels;  // one per trigger run
  std::vector<TcLabel> tc_labels;  // same spans, with techniques
};

// Trigger surface for one technique; distinct single tokens, disjoint from
// the filler lexicon.
const char32_t* synth_trigger(Technique t);

// Articles of filler prose with embedded trigger runs (1-3 copies of one
// technique's trigger). Runs are separated by at least one filler word and
// paragraphs open and close with filler, so span reconstruction's gap merge
// can never fuse two distinct runs. The first two round-robin cycles
// guarantee every technique appears; later runs skew toward low indices to
// mimic the real class imbalance.
SynthCorpus make_synth_corpus(const SynthConfig& cfg);

}  // namespace propdetect
