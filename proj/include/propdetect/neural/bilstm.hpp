#pragma once

#include <memory>
#include <span>
#include <vector>

#include "propdetect/neural/encoder.hpp"

namespace propdetect::neural {

// One direction of the recurrent layer. Gate order in the stacked weight
// matrices is input, forget, cell, output; the forget-gate bias starts at 1.
struct LstmDirection {
  Matrix wx;  // d x 4h
  Matrix wh;  // h x 4h
  Matrix b;   // 1 x 4h
  Matrix gwx, gwh, gb;
  LstmDirection(size_t d, size_t h);
};

struct LstmDirectionCache {
  // per time step, saved for backprop through time
  std::vector<Matrix> gates;   // 1 x 4h, post-activation (i, f, g, o)
  std::vector<Matrix> pre;     // 1 x 4h, pre-activation
  std::vector<Matrix> cell;    // 1 x h
  std::vector<Matrix> hidden;  // 1 x h
};

struct BilstmCache : EncoderCache {
  std::vector<int> token_ids;
  Matrix embedded;  // S x d
  Matrix drop_embed;
  LstmDirectionCache fwd, bwd;
  Matrix concat;  // S x 2h
  Matrix drop_proj;
  Matrix output;  // S x d
};

// Embedding lookup -> one bidirectional recurrent layer -> concatenated
// directions projected back to d. The layer-count knob is a transformer
// concern; this baseline is always a single bidirectional layer.
class BilstmEncoder : public Encoder {
 public:
  explicit BilstmEncoder(EncoderConfig cfg);

  std::unique_ptr<EncoderCache> make_cache() const override;
  Matrix forward(std::span<const int> token_ids, EncoderCache& cache,
                 Rng* dropout_rng) const override;
  void backward(const Matrix& d_features, EncoderCache& cache) override;
  std::vector<NamedParam> named_params() override;
  void init(Rng& rng) override;
  void set_token_embeddings(const Matrix& table) override;

  size_t hidden() const { return cfg_.hidden_dim; }  // per direction

  Matrix tok_embed, bos_vec, eos_vec;
  Matrix g_tok_embed, g_bos_vec, g_eos_vec;
  LstmDirection fwd, bwd;
  Matrix proj_w;  // 2h x d
  Matrix proj_b;  // 1 x d
  Matrix g_proj_w, g_proj_b;
};

}  // namespace propdetect::neural
