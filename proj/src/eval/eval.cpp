#include "propdetect/eval/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <tuple>

#include "propdetect/util/errors.hpp"

namespace propdetect {

namespace {

size_t overlap(Span a, Span b) {
  size_t lo = std::max(a.start, b.start);
  size_t hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

void check_span(const Span& s, int64_t article_id) {
  if (s.start >= s.end)
    throw ContractError("invalid span [" + std::to_string(s.start) + ", " +
                        std::to_string(s.end) + ") in article " +
                        std::to_string(article_id));
}

double harmonic_f1(double p, double r) {
  return (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
}

using SpanKey = std::tuple<int64_t, size_t, size_t>;

std::string key_string(const SpanKey& k) {
  return "article " + std::to_string(std::get<0>(k)) + " span [" +
         std::to_string(std::get<1>(k)) + ", " +
         std::to_string(std::get<2>(k)) + ")";
}

struct KeyCounts {
  std::array<size_t, kTechniqueCount> pred{};
  std::array<size_t, kTechniqueCount> gold{};
  size_t pred_total = 0;
  size_t gold_total = 0;
};

std::map<SpanKey, KeyCounts> group_by_key(const std::vector<TcLabel>& pred,
                                          const std::vector<TcLabel>& gold) {
  std::map<SpanKey, KeyCounts> groups;
  for (const auto& l : pred) {
    check_span(l.span, l.article_id);
    auto& g = groups[{l.article_id, l.span.start, l.span.end}];
    ++g.pred[static_cast<size_t>(l.technique)];
    ++g.pred_total;
  }
  for (const auto& l : gold) {
    check_span(l.span, l.article_id);
    auto& g = groups[{l.article_id, l.span.start, l.span.end}];
    ++g.gold[static_cast<size_t>(l.technique)];
    ++g.gold_total;
  }
  return groups;
}

void require_aligned(const std::map<SpanKey, KeyCounts>& groups) {
  std::string bad;
  int listed = 0;
  for (const auto& [key, g] : groups) {
    if (g.pred_total == g.gold_total) continue;
    if (listed < 5) {
      if (!bad.empty()) bad += "; ";
      bad += key_string(key) + " has " + std::to_string(g.pred_total) +
             " prediction(s) vs " + std::to_string(g.gold_total) + " gold";
    }
    ++listed;
  }
  if (listed)
    throw ContractError(
        "prediction and gold span keys are not aligned: " + bad +
        (listed > 5 ? "; and " + std::to_string(listed - 5) + " more" : ""));
}

ClassReport report_from_groups(const std::map<SpanKey, KeyCounts>& groups) {
  ClassReport rep;
  std::array<size_t, kTechniqueCount> tp{}, pred_n{}, gold_n{};
  for (const auto& [key, g] : groups) {
    (void)key;
    for (size_t c = 0; c < kTechniqueCount; ++c) {
      tp[c] += std::min(g.pred[c], g.gold[c]);
      pred_n[c] += g.pred[c];
      gold_n[c] += g.gold[c];
    }
  }
  size_t tp_all = 0, pred_all = 0, gold_all = 0;
  for (size_t c = 0; c < kTechniqueCount; ++c) {
    rep.support[c] = gold_n[c];
    double p = pred_n[c] ? double(tp[c]) / double(pred_n[c]) : 0.0;
    double r = gold_n[c] ? double(tp[c]) / double(gold_n[c]) : 0.0;
    rep.precision[c] = p;
    rep.recall[c] = r;
    rep.f1[c] = harmonic_f1(p, r);
    tp_all += tp[c];
    pred_all += pred_n[c];
    gold_all += gold_n[c];
  }
  if (pred_all == 0 && gold_all == 0) {
    rep.micro_f1 = 1.0;  // vacuously perfect, matching the SI convention
  } else {
    double p = pred_all ? double(tp_all) / double(pred_all) : 0.0;
    double r = gold_all ? double(tp_all) / double(gold_all) : 0.0;
    rep.micro_f1 = harmonic_f1(p, r);
  }
  return rep;
}

}  // namespace

SiScore si_score(const std::vector<SiLabel>& pred,
                 const std::vector<SiLabel>& gold) {
  std::map<int64_t, std::pair<std::vector<Span>, std::vector<Span>>> articles;
  for (const auto& l : pred) {
    check_span(l.span, l.article_id);
    articles[l.article_id].first.push_back(l.span);
  }
  for (const auto& l : gold) {
    check_span(l.span, l.article_id);
    articles[l.article_id].second.push_back(l.span);
  }

  if (pred.empty() && gold.empty()) return {1.0, 1.0, 1.0};

  double p_num = 0.0, r_num = 0.0;
  for (const auto& [id, st] : articles) {
    (void)id;
    for (const Span& s : st.first)
      for (const Span& t : st.second) {
        size_t ov = overlap(s, t);
        if (!ov) continue;
        p_num += double(ov) / double(s.length());
        r_num += double(ov) / double(t.length());
      }
  }
  SiScore score;
  score.precision =
      pred.empty() ? 0.0 : std::min(1.0, p_num / double(pred.size()));
  score.recall =
      gold.empty() ? 0.0 : std::min(1.0, r_num / double(gold.size()));
  score.f1 = harmonic_f1(score.precision, score.recall);
  return score;
}

double tc_micro_f1(const std::vector<TcLabel>& pred,
                   const std::vector<TcLabel>& gold) {
  auto groups = group_by_key(pred, gold);
  require_aligned(groups);
  return report_from_groups(groups).micro_f1;
}

ClassReport per_class_report(const std::vector<TcLabel>& pred,
                             const std::vector<TcLabel>& gold) {
  auto groups = group_by_key(pred, gold);
  require_aligned(groups);
  return report_from_groups(groups);
}

ClassReport per_class_report_relaxed(const std::vector<TcLabel>& pred,
                                     const std::vector<TcLabel>& gold) {
  return report_from_groups(group_by_key(pred, gold));
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", value * 100.0);
  return std::string(buf);
}

}  // namespace propdetect
