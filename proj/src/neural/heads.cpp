#include "propdetect/neural/heads.hpp"

#include <cmath>

#include "propdetect/corpus/corpus.hpp"
#include "propdetect/kernels/kernels.hpp"
#include "propdetect/util/errors.hpp"
#include "src/neural/internal.hpp"

namespace propdetect::neural {

namespace {

using detail::linear;
using detail::linear_backward;

// Real token rows sit between the two sentinel rows.
size_t real_token_count(const Matrix& features) {
  if (features.rows() < 2)
    throw ContractError("feature matrix is missing the sentinel rows");
  return features.rows() - 2;
}

}  // namespace

SiHead::SiHead(size_t dim)
    : d(dim), w1(dim, dim), b1(1, dim), w2(dim, 2), b2(1, 2), gw1(dim, dim),
      gb1(1, dim), gw2(dim, 2), gb2(1, 2) {}

void SiHead::init(Rng& rng) {
  detail::fill_normal(w1, rng, 0.02);
  b1.zero();
  detail::fill_normal(w2, rng, 0.02);
  b2.zero();
}

Matrix SiHead::forward(const Matrix& features, SiHeadCache& cache) const {
  size_t t_len = real_token_count(features);
  cache.feats = Matrix(t_len, d);
  for (size_t t = 0; t < t_len; ++t)
    for (size_t c = 0; c < d; ++c) cache.feats(t, c) = features(t + 1, c);

  cache.hidden_pre = linear(cache.feats, w1, b1);
  cache.hidden = Matrix(t_len, d);
  kernels::gelu(cache.hidden_pre.data(), cache.hidden.data(),
                cache.hidden_pre.size());
  return linear(cache.hidden, w2, b2);
}

Matrix SiHead::backward(const Matrix& d_emissions, SiHeadCache& cache) {
  size_t t_len = cache.feats.rows();
  if (d_emissions.rows() != t_len || d_emissions.cols() != 2)
    throw ContractError("emission gradient shape does not match the cached "
                        "forward pass");
  Matrix d_hidden = linear_backward(cache.hidden, w2, d_emissions, gw2, gb2);
  Matrix d_pre(t_len, d);
  kernels::gelu_grad(cache.hidden_pre.data(), d_hidden.data(), d_pre.data(),
                     d_pre.size());
  Matrix d_real = linear_backward(cache.feats, w1, d_pre, gw1, gb1);

  Matrix d_features(t_len + 2, d);
  for (size_t t = 0; t < t_len; ++t)
    for (size_t c = 0; c < d; ++c) d_features(t + 1, c) = d_real(t, c);
  return d_features;
}

std::vector<NamedParam> SiHead::named_params(const std::string& prefix) {
  return {{prefix + "w1", &w1, &gw1},
          {prefix + "b1", &b1, &gb1},
          {prefix + "w2", &w2, &gw2},
          {prefix + "b2", &b2, &gb2}};
}

TcHead::TcHead(size_t dim)
    : d(dim),
      funnel(static_cast<size_t>(std::llround(static_cast<double>(dim) / 3.0))),
      w1(dim, funnel), b1(1, funnel), w2(funnel, kTechniqueCount),
      b2(1, kTechniqueCount), gw1(dim, funnel), gb1(1, funnel),
      gw2(funnel, kTechniqueCount), gb2(1, kTechniqueCount) {
  if (funnel == 0)
    throw ContractError("hidden_dim " + std::to_string(dim) +
                        " is too small for the /3 funnel");
}

void TcHead::init(Rng& rng) {
  detail::fill_normal(w1, rng, 0.02);
  b1.zero();
  detail::fill_normal(w2, rng, 0.02);
  b2.zero();
}

std::vector<double> TcHead::forward(const Matrix& features,
                                    TcHeadCache& cache) const {
  size_t t_len = real_token_count(features);
  if (t_len == 0)
    throw ContractError("cannot classify a sample with no real tokens");
  cache.real_count = t_len;
  cache.total_rows = features.rows();

  cache.pool = Matrix(1, d);
  for (size_t t = 0; t < t_len; ++t)
    kernels::axpy(1.0, features.row(t + 1), cache.pool.data(), d);
  kernels::scal(1.0 / static_cast<double>(t_len), cache.pool.data(), d);

  cache.z1_pre = linear(cache.pool, w1, b1);
  cache.z1_act = Matrix(1, funnel);
  kernels::gelu(cache.z1_pre.data(), cache.z1_act.data(), funnel);
  cache.probs = linear(cache.z1_act, w2, b2);
  kernels::softmax_rows(cache.probs.data(), 1, kTechniqueCount);

  return std::vector<double>(cache.probs.data(),
                             cache.probs.data() + kTechniqueCount);
}

double TcHead::backward_ce(int target, TcHeadCache& cache,
                           Matrix& d_features) {
  if (target < 0 || target >= static_cast<int>(kTechniqueCount))
    throw BoundsError("technique index " + std::to_string(target) +
                      " outside [0, " + std::to_string(kTechniqueCount) + ")");
  if (cache.probs.empty())
    throw ContractError("backward_ce needs a cached forward pass");

  double p = cache.probs.data()[target];
  double loss = -std::log(std::max(p, 1e-300));

  Matrix dz2 = cache.probs;
  dz2.data()[target] -= 1.0;
  Matrix dz1 = linear_backward(cache.z1_act, w2, dz2, gw2, gb2);
  Matrix dpre(1, funnel);
  kernels::gelu_grad(cache.z1_pre.data(), dz1.data(), dpre.data(), funnel);
  Matrix dpool = linear_backward(cache.pool, w1, dpre, gw1, gb1);

  d_features = Matrix(cache.total_rows, d);
  double inv = 1.0 / static_cast<double>(cache.real_count);
  for (size_t t = 0; t < cache.real_count; ++t)
    kernels::axpy(inv, dpool.data(), d_features.row(t + 1), d);
  return loss;
}

std::vector<NamedParam> TcHead::named_params(const std::string& prefix) {
  return {{prefix + "w1", &w1, &gw1},
          {prefix + "b1", &b1, &gb1},
          {prefix + "w2", &w2, &gw2},
          {prefix + "b2", &b2, &gb2}};
}

MlmHead::MlmHead(size_t dim, size_t vocab_size)
    : d(dim), vocab(vocab_size), w(dim, vocab_size), b(1, vocab_size),
      gw(dim, vocab_size), gb(1, vocab_size) {}

void MlmHead::init(Rng& rng) {
  detail::fill_normal(w, rng, 0.02);
  b.zero();
}

namespace {

// Gathers masked feature rows, runs the projection + softmax, and returns
// the mean cross-entropy. Fills probs/gathered for the gradient path.
double mlm_forward(const Matrix& features, const std::vector<size_t>& positions,
                   const std::vector<int>& original_ids, const Matrix& w,
                   const Matrix& b, size_t vocab, Matrix& gathered,
                   Matrix& probs) {
  if (positions.empty())
    throw ContractError("masked-LM loss needs at least one masked position");
  size_t m = positions.size();
  size_t d = features.cols();
  gathered = Matrix(m, d);
  for (size_t r = 0; r < m; ++r) {
    size_t pos = positions[r];
    if (pos >= original_ids.size())
      throw BoundsError("mask position " + std::to_string(pos) +
                        " outside the sequence of " +
                        std::to_string(original_ids.size()) + " tokens");
    if (pos + 2 > features.rows() - 1)
      throw BoundsError("mask position " + std::to_string(pos) +
                        " has no feature row");
    for (size_t c = 0; c < d; ++c) gathered(r, c) = features(pos + 1, c);
  }
  probs = linear(gathered, w, b);
  kernels::softmax_rows(probs.data(), m, vocab);
  double loss = 0.0;
  for (size_t r = 0; r < m; ++r) {
    int target = original_ids[positions[r]];
    if (target < 0 || static_cast<size_t>(target) >= vocab)
      throw BoundsError("masked target id " + std::to_string(target) +
                        " outside vocabulary of size " + std::to_string(vocab));
    loss -= std::log(std::max(probs(r, static_cast<size_t>(target)), 1e-300));
  }
  return loss / static_cast<double>(m);
}

}  // namespace

double MlmHead::loss(const Matrix& features,
                     const std::vector<size_t>& mask_positions,
                     const std::vector<int>& original_ids) const {
  Matrix gathered, probs;
  return mlm_forward(features, mask_positions, original_ids, w, b, vocab,
                     gathered, probs);
}

double MlmHead::loss_and_grad(const Matrix& features,
                              const std::vector<size_t>& mask_positions,
                              const std::vector<int>& original_ids,
                              Matrix& d_features) {
  Matrix gathered, probs;
  double value = mlm_forward(features, mask_positions, original_ids, w, b,
                             vocab, gathered, probs);

  size_t m = mask_positions.size();
  Matrix dlogits = probs;
  for (size_t r = 0; r < m; ++r)
    dlogits(r, static_cast<size_t>(original_ids[mask_positions[r]])) -= 1.0;
  kernels::scal(1.0 / static_cast<double>(m), dlogits.data(), dlogits.size());

  Matrix d_gathered = linear_backward(gathered, w, dlogits, gw, gb);

  d_features = Matrix(features.rows(), features.cols());
  for (size_t r = 0; r < m; ++r)
    kernels::axpy(1.0, d_gathered.row(r), d_features.row(mask_positions[r] + 1),
                  features.cols());
  return value;
}

std::vector<NamedParam> MlmHead::named_params(const std::string& prefix) {
  return {{prefix + "w", &w, &gw}, {prefix + "b", &b, &gb}};
}

}  // namespace propdetect::neural
