#include "propdetect/neural/transformer.hpp"

#include <cmath>

#include "propdetect/kernels/kernels.hpp"
#include "propdetect/util/errors.hpp"
#include "src/neural/internal.hpp"

namespace propdetect::neural {

namespace {

using detail::add_into;
using detail::linear;
using detail::linear_backward;

// Copies head h's column block into a contiguous S x dh matrix.
Matrix slice_head(const Matrix& full, size_t h, size_t dh) {
  Matrix out(full.rows(), dh);
  for (size_t r = 0; r < full.rows(); ++r) {
    const double* src = full.row(r) + h * dh;
    double* dst = out.row(r);
    for (size_t c = 0; c < dh; ++c) dst[c] = src[c];
  }
  return out;
}

void scatter_head(Matrix& full, const Matrix& part, size_t h, size_t dh) {
  for (size_t r = 0; r < full.rows(); ++r) {
    const double* src = part.row(r);
    double* dst = full.row(r) + h * dh;
    for (size_t c = 0; c < dh; ++c) dst[c] = src[c];
  }
}

// dS = A ⊙ (dA - rowwise_dot(dA, A)): softmax Jacobian applied row by row.
Matrix softmax_backward_rows(const Matrix& attn, const Matrix& d_attn) {
  Matrix ds(attn.rows(), attn.cols());
  for (size_t r = 0; r < attn.rows(); ++r) {
    double d = kernels::dot(d_attn.row(r), attn.row(r), attn.cols());
    const double* ar = attn.row(r);
    const double* dr = d_attn.row(r);
    double* out = ds.row(r);
    for (size_t c = 0; c < attn.cols(); ++c) out[c] = ar[c] * (dr[c] - d);
  }
  return ds;
}

}  // namespace

TransformerLayer::TransformerLayer(size_t d, size_t ffn_dim)
    : wq(d, d), bq(1, d), wk(d, d), bk(1, d), wv(d, d), bv(1, d), wo(d, d),
      bo(1, d), ln1_gain(1, d), ln1_bias(1, d), ffn_w1(d, ffn_dim),
      ffn_b1(1, ffn_dim), ffn_w2(ffn_dim, d), ffn_b2(1, d), ln2_gain(1, d),
      ln2_bias(1, d), gwq(d, d), gbq(1, d), gwk(d, d), gbk(1, d), gwv(d, d),
      gbv(1, d), gwo(d, d), gbo(1, d), gln1_gain(1, d), gln1_bias(1, d),
      gffn_w1(d, ffn_dim), gffn_b1(1, ffn_dim), gffn_w2(ffn_dim, d),
      gffn_b2(1, d), gln2_gain(1, d), gln2_bias(1, d) {}

TransformerEncoder::TransformerEncoder(EncoderConfig cfg)
    : Encoder(std::move(cfg)),
      tok_embed(cfg_.vocab_size, cfg_.hidden_dim),
      pos_embed(cfg_.max_seq_len, cfg_.hidden_dim),
      bos_vec(1, cfg_.hidden_dim),
      eos_vec(1, cfg_.hidden_dim),
      g_tok_embed(cfg_.vocab_size, cfg_.hidden_dim),
      g_pos_embed(cfg_.max_seq_len, cfg_.hidden_dim),
      g_bos_vec(1, cfg_.hidden_dim),
      g_eos_vec(1, cfg_.hidden_dim) {
  for (size_t l = 0; l < cfg_.layers; ++l)
    layers.emplace_back(cfg_.hidden_dim, 4 * cfg_.hidden_dim);
}

std::unique_ptr<EncoderCache> TransformerEncoder::make_cache() const {
  return std::make_unique<TransformerCache>();
}

void TransformerEncoder::init(Rng& rng) {
  detail::fill_normal(tok_embed, rng, 0.02);
  detail::fill_normal(pos_embed, rng, 0.02);
  detail::fill_normal(bos_vec, rng, 0.02);
  detail::fill_normal(eos_vec, rng, 0.02);
  for (auto& l : layers) {
    detail::fill_normal(l.wq, rng, 0.02);
    detail::fill_normal(l.wk, rng, 0.02);
    detail::fill_normal(l.wv, rng, 0.02);
    detail::fill_normal(l.wo, rng, 0.02);
    l.bq.zero();
    l.bk.zero();
    l.bv.zero();
    l.bo.zero();
    l.ln1_gain.fill(1.0);
    l.ln1_bias.zero();
    detail::fill_normal(l.ffn_w1, rng, 0.02);
    l.ffn_b1.zero();
    detail::fill_normal(l.ffn_w2, rng, 0.02);
    l.ffn_b2.zero();
    l.ln2_gain.fill(1.0);
    l.ln2_bias.zero();
  }
}

void TransformerEncoder::set_token_embeddings(const Matrix& table) {
  if (!table.same_shape(tok_embed))
    throw ContractError("embedding table shape " + std::to_string(table.rows()) +
                        "x" + std::to_string(table.cols()) + " does not match " +
                        std::to_string(tok_embed.rows()) + "x" +
                        std::to_string(tok_embed.cols()));
  tok_embed = table;
}

Matrix TransformerEncoder::forward(std::span<const int> token_ids,
                                   EncoderCache& cache_base,
                                   Rng* dropout_rng) const {
  auto& cache = dynamic_cast<TransformerCache&>(cache_base);
  size_t t_len = token_ids.size();
  size_t s = t_len + 2;
  if (s > cfg_.max_seq_len)
    throw ContractError("input of " + std::to_string(t_len) +
                        " tokens exceeds max_seq_len " +
                        std::to_string(cfg_.max_seq_len) +
                        " (2 sentinel positions included)");
  size_t d = cfg_.hidden_dim;

  cache.token_ids.assign(token_ids.begin(), token_ids.end());
  Matrix x(s, d);
  for (size_t c = 0; c < d; ++c) {
    x(0, c) = bos_vec.data()[c] + pos_embed(0, c);
    x(s - 1, c) = eos_vec.data()[c] + pos_embed(s - 1, c);
  }
  for (size_t t = 0; t < t_len; ++t) {
    int id = token_ids[t];
    if (id < 0 || static_cast<size_t>(id) >= cfg_.vocab_size)
      throw BoundsError("token id " + std::to_string(id) +
                        " outside vocabulary of size " +
                        std::to_string(cfg_.vocab_size));
    const double* e = tok_embed.row(static_cast<size_t>(id));
    const double* p = pos_embed.row(t + 1);
    double* xr = x.row(t + 1);
    for (size_t c = 0; c < d; ++c) xr[c] = e[c] + p[c];
  }
  cache.embedded = x;
  cache.drop_embed = Matrix();
  bool use_dropout = dropout_rng != nullptr && cfg_.dropout > 0.0;
  if (use_dropout)
    detail::dropout_forward(x, cfg_.dropout, *dropout_rng, cache.drop_embed);

  size_t dh = d / cfg_.heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  cache.layers.assign(cfg_.layers, TransformerLayerCache{});

  for (size_t li = 0; li < layers.size(); ++li) {
    const auto& lp = layers[li];
    auto& lc = cache.layers[li];
    lc.x_in = x;

    lc.q = linear(x, lp.wq, lp.bq);
    lc.k = linear(x, lp.wk, lp.bk);
    lc.v = linear(x, lp.wv, lp.bv);

    lc.attn.clear();
    lc.context = Matrix(s, d);
    for (size_t h = 0; h < cfg_.heads; ++h) {
      Matrix qh = slice_head(lc.q, h, dh);
      Matrix kh = slice_head(lc.k, h, dh);
      Matrix vh = slice_head(lc.v, h, dh);
      Matrix scores(s, s);
      kernels::matmul_nt(scores.data(), qh.data(), kh.data(), s, dh, s, false);
      kernels::scal(inv_sqrt, scores.data(), scores.size());
      kernels::softmax_rows(scores.data(), s, s);
      Matrix ctx(s, dh);
      kernels::matmul(ctx.data(), scores.data(), vh.data(), s, s, dh, false);
      scatter_head(lc.context, ctx, h, dh);
      lc.attn.push_back(std::move(scores));
    }

    lc.attn_out = linear(lc.context, lp.wo, lp.bo);
    lc.drop_attn = Matrix();
    if (use_dropout)
      detail::dropout_forward(lc.attn_out, cfg_.dropout, *dropout_rng,
                              lc.drop_attn);

    Matrix r1 = x;
    add_into(r1, lc.attn_out);
    detail::layernorm(r1, lp.ln1_gain, lp.ln1_bias, lc.ln1_x_hat, lc.ln1_rstd,
                      lc.x_mid);

    lc.ffn_pre = linear(lc.x_mid, lp.ffn_w1, lp.ffn_b1);
    lc.ffn_act = Matrix(s, lc.ffn_pre.cols());
    kernels::gelu(lc.ffn_pre.data(), lc.ffn_act.data(), lc.ffn_pre.size());
    Matrix g = linear(lc.ffn_act, lp.ffn_w2, lp.ffn_b2);
    lc.drop_ffn = Matrix();
    if (use_dropout)
      detail::dropout_forward(g, cfg_.dropout, *dropout_rng, lc.drop_ffn);

    Matrix r2 = lc.x_mid;
    add_into(r2, g);
    Matrix x_out;
    detail::layernorm(r2, lp.ln2_gain, lp.ln2_bias, lc.ln2_x_hat, lc.ln2_rstd,
                      x_out);
    x = std::move(x_out);
  }

  cache.output = x;
  return x;
}

void TransformerEncoder::backward(const Matrix& d_features,
                                  EncoderCache& cache_base) {
  auto& cache = dynamic_cast<TransformerCache&>(cache_base);
  size_t s = cache.output.rows();
  if (d_features.rows() != s || d_features.cols() != cfg_.hidden_dim)
    throw ContractError("feature gradient shape does not match the forward "
                        "pass output");
  size_t d = cfg_.hidden_dim;
  size_t dh = d / cfg_.heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dx = d_features;
  for (size_t li = layers.size(); li-- > 0;) {
    auto& lp = layers[li];
    auto& lc = cache.layers[li];

    // second LayerNorm
    Matrix dr2 = detail::layernorm_backward(dx, lp.ln2_gain, lc.ln2_x_hat,
                                            lc.ln2_rstd, lp.gln2_gain,
                                            lp.gln2_bias);
    Matrix dx_mid = dr2;  // residual branch
    Matrix dg = std::move(dr2);
    detail::dropout_backward(dg, lc.drop_ffn);

    // FFN
    Matrix dh_act =
        linear_backward(lc.ffn_act, lp.ffn_w2, dg, lp.gffn_w2, lp.gffn_b2);
    Matrix df1(dh_act.rows(), dh_act.cols());
    kernels::gelu_grad(lc.ffn_pre.data(), dh_act.data(), df1.data(),
                       df1.size());
    add_into(dx_mid,
             linear_backward(lc.x_mid, lp.ffn_w1, df1, lp.gffn_w1, lp.gffn_b1));

    // first LayerNorm
    Matrix dr1 = detail::layernorm_backward(dx_mid, lp.ln1_gain, lc.ln1_x_hat,
                                            lc.ln1_rstd, lp.gln1_gain,
                                            lp.gln1_bias);
    Matrix dx_in = dr1;  // residual branch
    Matrix dattn_out = std::move(dr1);
    detail::dropout_backward(dattn_out, lc.drop_attn);

    // output projection
    Matrix dcontext =
        linear_backward(lc.context, lp.wo, dattn_out, lp.gwo, lp.gbo);

    // attention heads
    Matrix dq(s, d), dk(s, d), dv(s, d);
    for (size_t h = 0; h < cfg_.heads; ++h) {
      Matrix qh = slice_head(lc.q, h, dh);
      Matrix kh = slice_head(lc.k, h, dh);
      Matrix vh = slice_head(lc.v, h, dh);
      Matrix dctx = slice_head(dcontext, h, dh);
      const Matrix& attn = lc.attn[h];

      Matrix da(s, s);
      kernels::matmul_nt(da.data(), dctx.data(), vh.data(), s, dh, s, false);
      Matrix dvh(s, dh);
      kernels::matmul_tn(dvh.data(), attn.data(), dctx.data(), s, s, dh,
                         false);
      Matrix ds = softmax_backward_rows(attn, da);
      Matrix dqh(s, dh);
      kernels::matmul(dqh.data(), ds.data(), kh.data(), s, s, dh, false);
      kernels::scal(inv_sqrt, dqh.data(), dqh.size());
      Matrix dkh(s, dh);
      kernels::matmul_tn(dkh.data(), ds.data(), qh.data(), s, s, dh, false);
      kernels::scal(inv_sqrt, dkh.data(), dkh.size());

      scatter_head(dq, dqh, h, dh);
      scatter_head(dk, dkh, h, dh);
      scatter_head(dv, dvh, h, dh);
    }

    add_into(dx_in, linear_backward(lc.x_in, lp.wq, dq, lp.gwq, lp.gbq));
    add_into(dx_in, linear_backward(lc.x_in, lp.wk, dk, lp.gwk, lp.gbk));
    add_into(dx_in, linear_backward(lc.x_in, lp.wv, dv, lp.gwv, lp.gbv));
    dx = std::move(dx_in);
  }

  detail::dropout_backward(dx, cache.drop_embed);

  // embedding tables
  kernels::axpy(1.0, dx.row(0), g_bos_vec.data(), d);
  kernels::axpy(1.0, dx.row(s - 1), g_eos_vec.data(), d);
  for (size_t t = 0; t + 2 < s; ++t)
    kernels::axpy(1.0, dx.row(t + 1),
                  g_tok_embed.row(static_cast<size_t>(cache.token_ids[t])), d);
  for (size_t p = 0; p < s; ++p)
    kernels::axpy(1.0, dx.row(p), g_pos_embed.row(p), d);
}

std::vector<NamedParam> TransformerEncoder::named_params() {
  std::vector<NamedParam> out = {
      {"embed.tokens", &tok_embed, &g_tok_embed},
      {"embed.positions", &pos_embed, &g_pos_embed},
      {"embed.bos", &bos_vec, &g_bos_vec},
      {"embed.eos", &eos_vec, &g_eos_vec},
  };
  for (size_t li = 0; li < layers.size(); ++li) {
    auto& l = layers[li];
    std::string p = "layer" + std::to_string(li) + ".";
    out.push_back({p + "attn.wq", &l.wq, &l.gwq});
    out.push_back({p + "attn.bq", &l.bq, &l.gbq});
    out.push_back({p + "attn.wk", &l.wk, &l.gwk});
    out.push_back({p + "attn.bk", &l.bk, &l.gbk});
    out.push_back({p + "attn.wv", &l.wv, &l.gwv});
    out.push_back({p + "attn.bv", &l.bv, &l.gbv});
    out.push_back({p + "attn.wo", &l.wo, &l.gwo});
    out.push_back({p + "attn.bo", &l.bo, &l.gbo});
    out.push_back({p + "ln1.gain", &l.ln1_gain, &l.gln1_gain});
    out.push_back({p + "ln1.bias", &l.ln1_bias, &l.gln1_bias});
    out.push_back({p + "ffn.w1", &l.ffn_w1, &l.gffn_w1});
    out.push_back({p + "ffn.b1", &l.ffn_b1, &l.gffn_b1});
    out.push_back({p + "ffn.w2", &l.ffn_w2, &l.gffn_w2});
    out.push_back({p + "ffn.b2", &l.ffn_b2, &l.gffn_b2});
    out.push_back({p + "ln2.gain", &l.ln2_gain, &l.gln2_gain});
    out.push_back({p + "ln2.bias", &l.ln2_bias, &l.gln2_bias});
  }
  return out;
}

}  // namespace propdetect::neural
