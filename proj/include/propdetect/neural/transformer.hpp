#pragma once

#include <memory>
#include <span>
#include <vector>

#include "propdetect/neural/encoder.hpp"

namespace propdetect::neural {

// One multi-head self-attention block with post-norm residuals:
//   x = LayerNorm(x + MultiHead(x)); x = LayerNorm(x + FFN(x))
// FFN widens d -> 4d -> d with a GELU in the middle.
struct TransformerLayer {
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln1_gain, ln1_bias;
  Matrix ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Matrix ln2_gain, ln2_bias;

  // gradient accumulators, same shapes
  Matrix gwq, gbq, gwk, gbk, gwv, gbv, gwo, gbo;
  Matrix gln1_gain, gln1_bias;
  Matrix gffn_w1, gffn_b1, gffn_w2, gffn_b2;
  Matrix gln2_gain, gln2_bias;

  TransformerLayer(size_t d, size_t ffn_dim);
};

// Saved activations for one layer's forward pass.
struct TransformerLayerCache {
  Matrix x_in;                // block input, S x d
  Matrix q, k, v;             // projected, S x d
  std::vector<Matrix> attn;   // per head: S x S rows summing to 1
  Matrix context;             // concatenated head outputs, S x d
  Matrix attn_out;            // after output projection (+dropout), S x d
  Matrix ln1_x_hat;           // normalized residual sum
  std::vector<double> ln1_rstd;
  Matrix x_mid;               // after first LayerNorm, S x d
  Matrix ffn_pre;             // S x 4d, pre-GELU
  Matrix ffn_act;             // S x 4d, post-GELU
  Matrix ln2_x_hat;
  std::vector<double> ln2_rstd;
  Matrix drop_attn, drop_ffn;  // inverted-dropout masks; empty when unused
};

struct TransformerCache : EncoderCache {
  std::vector<int> token_ids;
  Matrix embedded;  // S x d before dropout
  Matrix drop_embed;
  std::vector<TransformerLayerCache> layers;
  Matrix output;  // final S x d
};

class TransformerEncoder : public Encoder {
 public:
  explicit TransformerEncoder(EncoderConfig cfg);

  std::unique_ptr<EncoderCache> make_cache() const override;
  Matrix forward(std::span<const int> token_ids, EncoderCache& cache,
                 Rng* dropout_rng) const override;
  void backward(const Matrix& d_features, EncoderCache& cache) override;
  std::vector<NamedParam> named_params() override;
  void init(Rng& rng) override;
  void set_token_embeddings(const Matrix& table) override;

  Matrix tok_embed, pos_embed, bos_vec, eos_vec;
  Matrix g_tok_embed, g_pos_embed, g_bos_vec, g_eos_vec;
  std::vector<TransformerLayer> layers;
};

}  // namespace propdetect::neural
