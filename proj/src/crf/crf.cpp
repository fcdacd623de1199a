#include "propdetect/crf/crf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "propdetect/util/errors.hpp"

namespace propdetect {

namespace {

void check_shapes(const Matrix& e, const CrfParams& p) {
  const size_t L = p.label_count();
  if (e.rows() < 1)
    throw ContractError("emissions need at least one position");
  if (e.cols() != L || p.transitions.rows() != L ||
      p.transitions.cols() != L || p.end_scores.size() != L)
    throw ContractError("CRF shapes disagree: emissions " +
                        std::to_string(e.rows()) + "x" +
                        std::to_string(e.cols()) + ", labels " +
                        std::to_string(L));
}

void check_labels(const LabelSeq& y, size_t T, size_t L) {
  if (y.size() != T)
    throw ContractError("label sequence length " + std::to_string(y.size()) +
                        " != emission rows " + std::to_string(T));
  for (int l : y)
    if (l < 0 || static_cast<size_t>(l) >= L)
      throw ContractError("label " + std::to_string(l) +
                          " outside [0, " + std::to_string(L) + ")");
}

double logsumexp(const double* x, size_t n) {
  double mx = x[0];
  for (size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::exp(x[i] - mx);
  return mx + std::log(s);
}

// alpha[t][j] = log sum of exp(prefix score) over prefixes ending in j at t.
Matrix forward_lattice(const Matrix& e, const CrfParams& p) {
  const size_t T = e.rows(), L = p.label_count();
  Matrix alpha(T, L);
  for (size_t j = 0; j < L; ++j)
    alpha(0, j) = p.start_scores[j] + e(0, j);
  std::vector<double> acc(L);
  for (size_t t = 1; t < T; ++t) {
    for (size_t j = 0; j < L; ++j) {
      for (size_t i = 0; i < L; ++i)
        acc[i] = alpha(t - 1, i) + p.transitions(i, j);
      alpha(t, j) = e(t, j) + logsumexp(acc.data(), L);
    }
  }
  return alpha;
}

// beta[t][i] = log sum of exp(suffix score) over suffixes given label i at t,
// including end scores.
Matrix backward_lattice(const Matrix& e, const CrfParams& p) {
  const size_t T = e.rows(), L = p.label_count();
  Matrix beta(T, L);
  for (size_t i = 0; i < L; ++i) beta(T - 1, i) = p.end_scores[i];
  std::vector<double> acc(L);
  for (size_t t = T - 1; t > 0; --t) {
    for (size_t i = 0; i < L; ++i) {
      for (size_t j = 0; j < L; ++j)
        acc[j] = p.transitions(i, j) + e(t, j) + beta(t, j);
      beta(t - 1, i) = logsumexp(acc.data(), L);
    }
  }
  return beta;
}

}  // namespace

double sequence_score(const Matrix& emissions, const CrfParams& params,
                      const LabelSeq& y) {
  check_shapes(emissions, params);
  check_labels(y, emissions.rows(), params.label_count());
  double score = params.start_scores[static_cast<size_t>(y[0])];
  for (size_t t = 0; t < y.size(); ++t)
    score += emissions(t, static_cast<size_t>(y[t]));
  for (size_t t = 0; t + 1 < y.size(); ++t)
    score += params.transitions(static_cast<size_t>(y[t]),
                                static_cast<size_t>(y[t + 1]));
  score += params.end_scores[static_cast<size_t>(y.back())];
  return score;
}

double log_partition(const Matrix& emissions, const CrfParams& params) {
  check_shapes(emissions, params);
  const size_t T = emissions.rows(), L = params.label_count();
  Matrix alpha = forward_lattice(emissions, params);
  std::vector<double> final_scores(L);
  for (size_t j = 0; j < L; ++j)
    final_scores[j] = alpha(T - 1, j) + params.end_scores[j];
  return logsumexp(final_scores.data(), L);
}

double nll_and_grad(const Matrix& emissions, const CrfParams& params,
                    const LabelSeq& y, CrfGrads& grads) {
  check_shapes(emissions, params);
  const size_t T = emissions.rows(), L = params.label_count();
  check_labels(y, T, L);

  Matrix alpha = forward_lattice(emissions, params);
  Matrix beta = backward_lattice(emissions, params);
  std::vector<double> final_scores(L);
  for (size_t j = 0; j < L; ++j)
    final_scores[j] = alpha(T - 1, j) + params.end_scores[j];
  const double log_z = logsumexp(final_scores.data(), L);

  grads.d_emissions = Matrix(T, L);
  grads.d_transitions = Matrix(L, L);
  grads.d_start.assign(L, 0.0);
  grads.d_end.assign(L, 0.0);

  // unary marginals minus indicators
  for (size_t t = 0; t < T; ++t)
    for (size_t j = 0; j < L; ++j)
      grads.d_emissions(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
  for (size_t t = 0; t < T; ++t)
    grads.d_emissions(t, static_cast<size_t>(y[t])) -= 1.0;

  // pairwise marginals minus transition counts
  for (size_t t = 0; t + 1 < T; ++t)
    for (size_t i = 0; i < L; ++i)
      for (size_t j = 0; j < L; ++j)
        grads.d_transitions(i, j) +=
            std::exp(alpha(t, i) + params.transitions(i, j) +
                     emissions(t + 1, j) + beta(t + 1, j) - log_z);
  for (size_t t = 0; t + 1 < T; ++t)
    grads.d_transitions(static_cast<size_t>(y[t]),
                        static_cast<size_t>(y[t + 1])) -= 1.0;

  for (size_t j = 0; j < L; ++j) {
    grads.d_start[j] = std::exp(alpha(0, j) + beta(0, j) - log_z);
    grads.d_end[j] = std::exp(alpha(T - 1, j) + params.end_scores[j] - log_z);
  }
  grads.d_start[static_cast<size_t>(y[0])] -= 1.0;
  grads.d_end[static_cast<size_t>(y.back())] -= 1.0;

  return log_z - sequence_score(emissions, params, y);
}

LabelSeq viterbi(const Matrix& emissions, const CrfParams& params) {
  check_shapes(emissions, params);
  const size_t T = emissions.rows(), L = params.label_count();
  Matrix delta(T, L);
  std::vector<std::vector<int>> backptr(T, std::vector<int>(L, 0));

  for (size_t j = 0; j < L; ++j)
    delta(0, j) = params.start_scores[j] + emissions(0, j);
  for (size_t t = 1; t < T; ++t) {
    for (size_t j = 0; j < L; ++j) {
      // ascending scan with strict > keeps the lowest maximizing index
      double best = delta(t - 1, 0) + params.transitions(0, j);
      int best_i = 0;
      for (size_t i = 1; i < L; ++i) {
        double s = delta(t - 1, i) + params.transitions(i, j);
        if (s > best) {
          best = s;
          best_i = static_cast<int>(i);
        }
      }
      delta(t, j) = emissions(t, j) + best;
      backptr[t][j] = best_i;
    }
  }

  double best = delta(T - 1, 0) + params.end_scores[0];
  int last = 0;
  for (size_t j = 1; j < L; ++j) {
    double s = delta(T - 1, j) + params.end_scores[j];
    if (s > best) {
      best = s;
      last = static_cast<int>(j);
    }
  }

  LabelSeq y(T);
  y[T - 1] = last;
  for (size_t t = T - 1; t > 0; --t)
    y[t - 1] = backptr[t][static_cast<size_t>(y[t])];
  return y;
}

}  // namespace propdetect
