#pragma once

// Scoring: span-overlap precision/recall/F1 for span identification and
// micro-averaged F1 with per-class breakdown for technique classification.

#include <array>
#include <string>
#include <vector>

#include "propdetect/corpus/corpus.hpp"

namespace propdetect {

struct SiScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassReport {
  std::array<double, kTechniqueCount> precision{};
  std::array<double, kTechniqueCount> recall{};
  std::array<double, kTechniqueCount> f1{};
  std::array<size_t, kTechniqueCount> support{};  // gold counts
  double micro_f1 = 0.0;
};

// Character-overlap credit C(s,t,h) = |s intersect t| / h, summed over all
// (pred, gold) pairs within each article and pooled across articles:
//   precision = sum C(s,t,|s|) / #pred,  recall = sum C(s,t,|t|) / #gold.
// The pair sum (no one-to-one matching) can over-credit under heavy overlap,
// so the pooled precision/recall are clamped to [0,1]. Both sides empty
// scores 1/1/1; empty predictions against nonempty gold score 0/0/0.
SiScore si_score(const std::vector<SiLabel>& pred,
                 const std::vector<SiLabel>& gold);

// Classification accuracy over aligned (article_id, span) keys: pred and
// gold must carry identical span-key multisets. Within a key group,
// techniques match by multiset intersection.
double tc_micro_f1(const std::vector<TcLabel>& pred,
                   const std::vector<TcLabel>& gold);

// Per-class precision/recall/F1 plus gold supports; micro aggregation of the
// per-class true positives reproduces tc_micro_f1.
ClassReport per_class_report(const std::vector<TcLabel>& pred,
                             const std::vector<TcLabel>& gold);

// As per_class_report, but tolerates span keys present on only one side:
// unmatched gold counts as false negatives, unmatched predictions as false
// positives. For end-to-end reporting where spans come from a separate
// detection stage.
ClassReport per_class_report_relaxed(const std::vector<TcLabel>& pred,
                                     const std::vector<TcLabel>& gold);

// "0.46060 -> 46.060" — the tables' percent formatting.
std::string format_percent(double value);

}  // namespace propdetect
