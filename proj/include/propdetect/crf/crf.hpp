#pragma once

// Linear-chain conditional random field over L labels (L = 2 for span
// tagging). All recursions run in log space; scores up to +-1e4 stay finite.

#include <vector>

#include "propdetect/util/matrix.hpp"

namespace propdetect {

// Emissions are a T x L matrix of per-token label scores.

struct CrfParams {
  Matrix transitions;               // L x L; [i][j] scores j following i
  std::vector<double> start_scores;  // length L
  std::vector<double> end_scores;    // length L

  explicit CrfParams(size_t label_count)
      : transitions(label_count, label_count),
        start_scores(label_count, 0.0),
        end_scores(label_count, 0.0) {}

  size_t label_count() const { return start_scores.size(); }
};

using LabelSeq = std::vector<int>;

struct CrfGrads {
  Matrix d_emissions;    // T x L
  Matrix d_transitions;  // L x L
  std::vector<double> d_start;
  std::vector<double> d_end;
};

// start[y0] + sum_t e[t][yt] + sum_t trans[yt][yt+1] + end[yT-1].
double sequence_score(const Matrix& emissions, const CrfParams& params,
                      const LabelSeq& y);

// log sum over all L^T sequences of exp(sequence_score), by the forward
// recursion with log-sum-exp.
double log_partition(const Matrix& emissions, const CrfParams& params);

// nll = log_partition - sequence_score(y). Gradients are model marginals
// minus empirical indicators, from forward-backward.
double nll_and_grad(const Matrix& emissions, const CrfParams& params,
                    const LabelSeq& y, CrfGrads& grads);

// Exact argmax sequence. Ties prefer the lower label index at each
// backtrack step, i.e. the reversed-lexicographically smallest maximizer.
LabelSeq viterbi(const Matrix& emissions, const CrfParams& params);

}  // namespace propdetect
