#pragma once

#include <string>
#include <vector>

#include "propdetect/neural/param.hpp"
#include "propdetect/util/matrix.hpp"
#include "propdetect/util/rng.hpp"

namespace propdetect::neural {

// Token-tagging head: dense d -> d with a GELU, then dense d -> 2 emission
// scores per real token. Sentinel feature rows (first and last) are sliced
// off, so the emissions line up with the CRF lattice.
struct SiHeadCache {
  Matrix feats;       // (T+2) x d as given
  Matrix hidden_pre;  // T x d
  Matrix hidden;      // T x d
};

struct SiHead {
  explicit SiHead(size_t d);
  void init(Rng& rng);

  Matrix forward(const Matrix& features, SiHeadCache& cache) const;  // T x 2
  // Returns d_features, (T+2) x d with zeroed sentinel rows; accumulates
  // weight gradients.
  Matrix backward(const Matrix& d_emissions, SiHeadCache& cache);

  std::vector<NamedParam> named_params(const std::string& prefix);

  size_t d;
  Matrix w1, b1, w2, b2;
  Matrix gw1, gb1, gw2, gb2;
};

// Classification head: mean-pool real token features, then a funnel
// d -> round(d/3) -> 14 with a GELU between, softmax on top.
struct TcHeadCache {
  size_t real_count = 0;
  size_t total_rows = 0;
  Matrix pool;    // 1 x d
  Matrix z1_pre;  // 1 x funnel
  Matrix z1_act;  // 1 x funnel
  Matrix probs;   // 1 x 14
};

struct TcHead {
  explicit TcHead(size_t d);
  void init(Rng& rng);

  // Probability vector over the 14 techniques; sums to 1.
  std::vector<double> forward(const Matrix& features, TcHeadCache& cache) const;
  // Cross-entropy against target on the cached forward. Accumulates weight
  // gradients, adds the feature gradient into d_features (same shape as the
  // forward's input), and returns the loss.
  double backward_ce(int target, TcHeadCache& cache, Matrix& d_features);

  std::vector<NamedParam> named_params(const std::string& prefix);

  size_t d;
  size_t funnel;  // round(d/3)
  Matrix w1, b1, w2, b2;
  Matrix gw1, gb1, gw2, gb2;
};

// Masked-LM output projection d -> vocab. Loss is averaged cross-entropy at
// the masked positions only; targets are read from original_ids at exactly
// those positions.
struct MlmHead {
  MlmHead(size_t d, size_t vocab_size);
  void init(Rng& rng);

  double loss(const Matrix& features, const std::vector<size_t>& mask_positions,
              const std::vector<int>& original_ids) const;
  // As loss(), but accumulates head gradients and adds into d_features.
  double loss_and_grad(const Matrix& features,
                       const std::vector<size_t>& mask_positions,
                       const std::vector<int>& original_ids,
                       Matrix& d_features);

  std::vector<NamedParam> named_params(const std::string& prefix);

  size_t d, vocab;
  Matrix w, b;
  Matrix gw, gb;
};

}  // namespace propdetect::neural
