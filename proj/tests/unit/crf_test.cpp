// The CRF is verified against an independent brute-force oracle that
// enumerates all L^T label sequences: partition function by direct
// summation, decoding by scanning for the maximal score with the same tie
// rule (reversed-lexicographic minimum), and gradients by central finite
// differences.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "propdetect/crf/crf.hpp"
#include "propdetect/util/errors.hpp"
#include "propdetect/util/rng.hpp"

using namespace propdetect;

namespace {

// Calls fn on every length-T sequence over [0, L).
template <typename Fn>
void enumerate_sequences(size_t T, size_t L, Fn fn) {
  LabelSeq y(T, 0);
  while (true) {
    fn(y);
    size_t t = 0;
    while (t < T && y[t] == static_cast<int>(L) - 1) y[t++] = 0;
    if (t == T) break;
    ++y[t];
  }
}

// Recomputes one sequence's potential directly from the definition.
double direct_score(const Matrix& e, const CrfParams& p, const LabelSeq& y) {
  double s = p.start_scores[size_t(y.front())] + p.end_scores[size_t(y.back())];
  for (size_t t = 0; t < y.size(); ++t) s += e(t, size_t(y[t]));
  for (size_t t = 0; t + 1 < y.size(); ++t)
    s += p.transitions(size_t(y[t]), size_t(y[t + 1]));
  return s;
}

double brute_log_partition(const Matrix& e, const CrfParams& p) {
  std::vector<double> scores;
  enumerate_sequences(e.rows(), p.label_count(), [&](const LabelSeq& y) {
    scores.push_back(direct_score(e, p, y));
  });
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  return mx + std::log(sum);
}

// True iff a precedes b when both are read last-position-first.
bool reversed_lex_less(const LabelSeq& a, const LabelSeq& b) {
  for (size_t t = a.size(); t > 0; --t) {
    if (a[t - 1] != b[t - 1]) return a[t - 1] < b[t - 1];
  }
  return false;
}

LabelSeq brute_viterbi(const Matrix& e, const CrfParams& p) {
  LabelSeq best;
  double best_score = 0.0;
  enumerate_sequences(e.rows(), p.label_count(), [&](const LabelSeq& y) {
    double s = direct_score(e, p, y);
    if (best.empty() || s > best_score ||
        (s == best_score && reversed_lex_less(y, best))) {
      best = y;
      best_score = s;
    }
  });
  return best;
}

Matrix random_emissions(Rng& rng, size_t T, size_t L, double lo, double hi) {
  Matrix e(T, L);
  for (size_t t = 0; t < T; ++t)
    for (size_t j = 0; j < L; ++j) e(t, j) = rng.uniform(lo, hi);
  return e;
}

CrfParams random_params(Rng& rng, size_t L, double lo, double hi) {
  CrfParams p(L);
  for (size_t i = 0; i < L; ++i) {
    p.start_scores[i] = rng.uniform(lo, hi);
    p.end_scores[i] = rng.uniform(lo, hi);
    for (size_t j = 0; j < L; ++j) p.transitions(i, j) = rng.uniform(lo, hi);
  }
  return p;
}

bool grad_close(double analytic, double fd) {
  return std::fabs(analytic - fd) <=
         1e-8 + 1e-4 * std::max(std::fabs(analytic), std::fabs(fd));
}

}  // namespace

TEST_CASE("sequence_score sums the chain potentials") {
  Matrix e(2, 2);
  e(0, 0) = 1; e(0, 1) = 2; e(1, 0) = 3; e(1, 1) = 4;
  CrfParams zero(2);
  CHECK(sequence_score(e, zero, {1, 1}) == 6.0);

  Matrix e1 = Matrix::row_vector({5, 7});
  CrfParams p(2);
  p.start_scores = {1, 0};
  p.end_scores = {0, 2};
  CHECK(sequence_score(e1, p, {1}) == 9.0);
}

TEST_CASE("sequence_score equals direct recomputation on random instances") {
  Rng rng(111);
  for (int trial = 0; trial < 50; ++trial) {
    size_t T = 1 + rng.below(8), L = 2 + rng.below(2);
    Matrix e = random_emissions(rng, T, L, -3, 3);
    CrfParams p = random_params(rng, L, -2, 2);
    LabelSeq y(T);
    for (auto& l : y) l = static_cast<int>(rng.below(L));
    CHECK(sequence_score(e, p, y) == doctest::Approx(direct_score(e, p, y))
                                         .epsilon(1e-12));
  }
}

TEST_CASE("sequence_score rejects shape and label violations") {
  Matrix e(2, 2);
  CrfParams p(2);
  CHECK_THROWS_AS(sequence_score(e, p, {0}), ContractError);
  CHECK_THROWS_AS(sequence_score(e, p, {0, 2}), ContractError);
  CHECK_THROWS_AS(sequence_score(Matrix(2, 3), p, {0, 0}), ContractError);
}

TEST_CASE("log_partition closed forms") {
  CrfParams zero(2);
  CHECK(log_partition(Matrix::row_vector({0, 0}), zero) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Matrix a = Matrix::row_vector({1.5, -0.5});
  CHECK(log_partition(a, zero) ==
        doctest::Approx(std::log(std::exp(1.5) + std::exp(-0.5)))
            .epsilon(1e-12));

  Matrix t3(3, 2);  // all zeros: 8 equally likely sequences
  CHECK(log_partition(t3, zero) ==
        doctest::Approx(3 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("log_partition matches exhaustive enumeration") {
  Rng rng(222);
  for (int trial = 0; trial < 200; ++trial) {
    size_t T = 1 + rng.below(8), L = 2 + rng.below(2);
    Matrix e = random_emissions(rng, T, L, -3, 3);
    CrfParams p = random_params(rng, L, -2, 2);
    CHECK(std::fabs(log_partition(e, p) - brute_log_partition(e, p)) <= 1e-9);
  }
}

TEST_CASE("log_partition stays finite for scores around 1e4") {
  Rng rng(321);
  Matrix e = random_emissions(rng, 5, 2, -1e4, 1e4);
  CrfParams p = random_params(rng, 2, -1e4, 1e4);
  double lz = log_partition(e, p);
  CHECK(std::isfinite(lz));
  // >= up to rounding at this magnitude (the two coincide within ~1 ulp)
  CHECK(lz >= sequence_score(e, p, viterbi(e, p)) - 1e-7);
}

TEST_CASE("distribution normalizes through log_partition") {
  Rng rng(333);
  for (int trial = 0; trial < 20; ++trial) {
    size_t T = 1 + rng.below(6), L = 2;
    Matrix e = random_emissions(rng, T, L, -3, 3);
    CrfParams p = random_params(rng, L, -2, 2);
    double lz = log_partition(e, p);
    double total = 0.0;
    enumerate_sequences(T, L, [&](const LabelSeq& y) {
      total += std::exp(direct_score(e, p, y) - lz);
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("nll of the uniform single-position case") {
  CrfParams zero(2);
  CrfGrads g;
  double nll = nll_and_grad(Matrix::row_vector({0, 0}), zero, {0}, g);
  CHECK(nll == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(g.d_emissions(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(g.d_emissions(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("nll gradients match central finite differences") {
  Rng rng(444);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    size_t T = 1 + rng.below(6), L = 2 + rng.below(2);
    Matrix e = random_emissions(rng, T, L, -2, 2);
    CrfParams p = random_params(rng, L, -2, 2);
    LabelSeq y(T);
    for (auto& l : y) l = static_cast<int>(rng.below(L));

    CrfGrads g;
    nll_and_grad(e, p, y, g);
    CrfGrads scratch;

    auto nll_at = [&]() { return nll_and_grad(e, p, y, scratch); };

    for (size_t t = 0; t < T; ++t)
      for (size_t j = 0; j < L; ++j) {
        double saved = e(t, j);
        e(t, j) = saved + h;
        double up = nll_at();
        e(t, j) = saved - h;
        double dn = nll_at();
        e(t, j) = saved;
        CHECK(grad_close(g.d_emissions(t, j), (up - dn) / (2 * h)));
      }
    for (size_t i = 0; i < L; ++i)
      for (size_t j = 0; j < L; ++j) {
        double saved = p.transitions(i, j);
        p.transitions(i, j) = saved + h;
        double up = nll_at();
        p.transitions(i, j) = saved - h;
        double dn = nll_at();
        p.transitions(i, j) = saved;
        CHECK(grad_close(g.d_transitions(i, j), (up - dn) / (2 * h)));
      }
    for (size_t j = 0; j < L; ++j) {
      double saved = p.start_scores[j];
      p.start_scores[j] = saved + h;
      double up = nll_at();
      p.start_scores[j] = saved - h;
      double dn = nll_at();
      p.start_scores[j] = saved;
      CHECK(grad_close(g.d_start[j], (up - dn) / (2 * h)));

      saved = p.end_scores[j];
      p.end_scores[j] = saved + h;
      up = nll_at();
      p.end_scores[j] = saved - h;
      dn = nll_at();
      p.end_scores[j] = saved;
      CHECK(grad_close(g.d_end[j], (up - dn) / (2 * h)));
    }
  }
}

TEST_CASE("marginals sum to one per position and nll is nonnegative") {
  Rng rng(555);
  for (int trial = 0; trial < 30; ++trial) {
    size_t T = 1 + rng.below(6), L = 2 + rng.below(2);
    Matrix e = random_emissions(rng, T, L, -3, 3);
    CrfParams p = random_params(rng, L, -2, 2);
    LabelSeq y(T);
    for (auto& l : y) l = static_cast<int>(rng.below(L));
    CrfGrads g;
    double nll = nll_and_grad(e, p, y, g);
    CHECK(nll >= -1e-12);
    for (size_t t = 0; t < T; ++t) {
      double row = 0.0;
      for (size_t j = 0; j < L; ++j) row += g.d_emissions(t, j);
      // marginals sum to 1; subtracting the single indicator leaves 0
      CHECK(row == doctest::Approx(0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("nll vanishes when mass concentrates on the decoded path") {
  Rng rng(666);
  Matrix e(6, 2);
  for (size_t t = 0; t < 6; ++t) {
    bool one = rng.below(2) == 1;
    e(t, 0) = one ? -50.0 : 50.0;
    e(t, 1) = one ? 50.0 : -50.0;
  }
  CrfParams p(2);
  CrfGrads g;
  CHECK(nll_and_grad(e, p, viterbi(e, p), g) <= 1e-10);
}

TEST_CASE("viterbi basic decodes") {
  CrfParams zero(2);
  Matrix e(2, 2);
  e(0, 0) = 1; e(0, 1) = 0; e(1, 0) = 0; e(1, 1) = 1;
  CHECK(viterbi(e, zero) == LabelSeq{0, 1});

  Matrix flat(2, 2);
  CrfParams p(2);
  p.transitions(1, 1) = 5.0;
  p.start_scores = {0, 3};
  CHECK(viterbi(flat, p) == LabelSeq{1, 1});
}

TEST_CASE("viterbi ties fall to the lower label at each backtrack step") {
  // everything zero: all 2^T sequences tie; the rule picks all-zeros
  Matrix e(4, 2);
  CrfParams zero(2);
  CHECK(viterbi(e, zero) == LabelSeq{0, 0, 0, 0});
}

TEST_CASE("viterbi equals brute-force search with the same tie rule") {
  Rng rng(777);
  for (int trial = 0; trial < 200; ++trial) {
    size_t T = 1 + rng.below(8), L = 2;
    // quantized scores make exact ties frequent
    Matrix e(T, L);
    for (size_t t = 0; t < T; ++t)
      for (size_t j = 0; j < L; ++j)
        e(t, j) = 0.5 * static_cast<double>(rng.below(3));
    CrfParams p(L);
    for (size_t i = 0; i < L; ++i) {
      p.start_scores[i] = 0.5 * static_cast<double>(rng.below(3));
      p.end_scores[i] = 0.5 * static_cast<double>(rng.below(3));
      for (size_t j = 0; j < L; ++j)
        p.transitions(i, j) = 0.5 * static_cast<double>(rng.below(3));
    }
    LabelSeq got = viterbi(e, p);
    LabelSeq want = brute_viterbi(e, p);
    CAPTURE(trial);
    CHECK(got == want);
    CHECK(sequence_score(e, p, got) ==
          doctest::Approx(sequence_score(e, p, want)).epsilon(1e-12));
  }
}

TEST_CASE("viterbi on smooth random scores maximizes the potential") {
  Rng rng(888);
  for (int trial = 0; trial < 100; ++trial) {
    size_t T = 1 + rng.below(7), L = 2 + rng.below(2);
    Matrix e = random_emissions(rng, T, L, -3, 3);
    CrfParams p = random_params(rng, L, -2, 2);
    LabelSeq got = viterbi(e, p);
    double got_score = sequence_score(e, p, got);
    enumerate_sequences(T, L, [&](const LabelSeq& y) {
      CHECK(got_score >= direct_score(e, p, y) - 1e-9);
    });
  }
}

TEST_CASE("viterbi is invariant to constant shifts of an emission row") {
  Rng rng(999);
  Matrix e = random_emissions(rng, 5, 2, -3, 3);
  CrfParams p = random_params(rng, 2, -2, 2);
  LabelSeq before = viterbi(e, p);
  e(2, 0) += 7.25;
  e(2, 1) += 7.25;
  CHECK(viterbi(e, p) == before);
}
