#include "propdetect/neural/bilstm.hpp"

#include <cmath>

#include "propdetect/kernels/kernels.hpp"
#include "propdetect/util/errors.hpp"
#include "src/neural/internal.hpp"

namespace propdetect::neural {

namespace {

using detail::add_into;
using detail::linear;
using detail::linear_backward;

// z holds the four stacked gate pre-activations (i, f, g, o), each h wide.
// Applies sigmoid to i and f, tanh to g, sigmoid to o, in place.
void activate_gates(Matrix& z, size_t h) {
  kernels::vsigmoid(z.data(), z.data(), 2 * h);
  kernels::vtanh(z.data() + 2 * h, z.data() + 2 * h, h);
  kernels::vsigmoid(z.data() + 3 * h, z.data() + 3 * h, h);
}

struct StepGrads {
  Matrix dz;       // 1 x 4h, pre-activation gradient
  Matrix dc_prev;  // 1 x h
};

// Backward through one LSTM cell step given post-activation gates, the
// previous cell state, and incoming dh/dc.
StepGrads cell_backward(const Matrix& gates, const Matrix& c_prev,
                        const Matrix& c_now, const Matrix& dh,
                        const Matrix& dc_in, size_t h) {
  StepGrads out{Matrix(1, 4 * h), Matrix(1, h)};
  const double* g = gates.data();  // i | f | g | o
  for (size_t j = 0; j < h; ++j) {
    double i_g = g[j], f_g = g[h + j], g_g = g[2 * h + j], o_g = g[3 * h + j];
    double tc = std::tanh(c_now.data()[j]);
    double dho = dh.data()[j];
    double dc = dc_in.data()[j] + dho * o_g * (1.0 - tc * tc);
    double do_ = dho * tc;
    double di = dc * g_g;
    double dg = dc * i_g;
    double df = dc * c_prev.data()[j];
    out.dc_prev.data()[j] = dc * f_g;
    out.dz.data()[j] = di * i_g * (1.0 - i_g);
    out.dz.data()[h + j] = df * f_g * (1.0 - f_g);
    out.dz.data()[2 * h + j] = dg * (1.0 - g_g * g_g);
    out.dz.data()[3 * h + j] = do_ * o_g * (1.0 - o_g);
  }
  return out;
}

}  // namespace

LstmDirection::LstmDirection(size_t d, size_t h)
    : wx(d, 4 * h), wh(h, 4 * h), b(1, 4 * h), gwx(d, 4 * h), gwh(h, 4 * h),
      gb(1, 4 * h) {}

BilstmEncoder::BilstmEncoder(EncoderConfig cfg)
    : Encoder(std::move(cfg)),
      tok_embed(cfg_.vocab_size, cfg_.hidden_dim),
      bos_vec(1, cfg_.hidden_dim),
      eos_vec(1, cfg_.hidden_dim),
      g_tok_embed(cfg_.vocab_size, cfg_.hidden_dim),
      g_bos_vec(1, cfg_.hidden_dim),
      g_eos_vec(1, cfg_.hidden_dim),
      fwd(cfg_.hidden_dim, cfg_.hidden_dim),
      bwd(cfg_.hidden_dim, cfg_.hidden_dim),
      proj_w(2 * cfg_.hidden_dim, cfg_.hidden_dim),
      proj_b(1, cfg_.hidden_dim),
      g_proj_w(2 * cfg_.hidden_dim, cfg_.hidden_dim),
      g_proj_b(1, cfg_.hidden_dim) {}

std::unique_ptr<EncoderCache> BilstmEncoder::make_cache() const {
  return std::make_unique<BilstmCache>();
}

void BilstmEncoder::init(Rng& rng) {
  size_t h = cfg_.hidden_dim;
  detail::fill_normal(tok_embed, rng, 0.02);
  detail::fill_normal(bos_vec, rng, 0.02);
  detail::fill_normal(eos_vec, rng, 0.02);
  for (LstmDirection* dir : {&fwd, &bwd}) {
    detail::fill_normal(dir->wx, rng, 0.02);
    detail::fill_normal(dir->wh, rng, 0.02);
    dir->b.zero();
    // forget-gate bias starts open so early training remembers
    for (size_t j = 0; j < h; ++j) dir->b.data()[h + j] = 1.0;
  }
  detail::fill_normal(proj_w, rng, 0.02);
  proj_b.zero();
}

void BilstmEncoder::set_token_embeddings(const Matrix& table) {
  if (!table.same_shape(tok_embed))
    throw ContractError("embedding table shape " + std::to_string(table.rows()) +
                        "x" + std::to_string(table.cols()) + " does not match " +
                        std::to_string(tok_embed.rows()) + "x" +
                        std::to_string(tok_embed.cols()));
  tok_embed = table;
}

Matrix BilstmEncoder::forward(std::span<const int> token_ids,
                              EncoderCache& cache_base,
                              Rng* dropout_rng) const {
  auto& cache = dynamic_cast<BilstmCache&>(cache_base);
  size_t t_len = token_ids.size();
  size_t s = t_len + 2;
  if (s > cfg_.max_seq_len)
    throw ContractError("input of " + std::to_string(t_len) +
                        " tokens exceeds max_seq_len " +
                        std::to_string(cfg_.max_seq_len) +
                        " (2 sentinel positions included)");
  size_t d = cfg_.hidden_dim;
  size_t h = cfg_.hidden_dim;

  cache.token_ids.assign(token_ids.begin(), token_ids.end());
  Matrix x(s, d);
  for (size_t c = 0; c < d; ++c) {
    x(0, c) = bos_vec.data()[c];
    x(s - 1, c) = eos_vec.data()[c];
  }
  for (size_t t = 0; t < t_len; ++t) {
    int id = token_ids[t];
    if (id < 0 || static_cast<size_t>(id) >= cfg_.vocab_size)
      throw BoundsError("token id " + std::to_string(id) +
                        " outside vocabulary of size " +
                        std::to_string(cfg_.vocab_size));
    const double* e = tok_embed.row(static_cast<size_t>(id));
    double* xr = x.row(t + 1);
    for (size_t c = 0; c < d; ++c) xr[c] = e[c];
  }
  cache.drop_embed = Matrix();
  bool use_dropout = dropout_rng != nullptr && cfg_.dropout > 0.0;
  if (use_dropout)
    detail::dropout_forward(x, cfg_.dropout, *dropout_rng, cache.drop_embed);
  cache.embedded = x;  // post-dropout: the rows the recurrence consumed

  auto run_direction = [&](const LstmDirection& dir, bool reverse,
                           LstmDirectionCache& dc) {
    dc.gates.assign(s, Matrix());
    dc.pre.assign(s, Matrix());
    dc.cell.assign(s, Matrix());
    dc.hidden.assign(s, Matrix());
    Matrix h_prev(1, h), c_prev(1, h);
    for (size_t step = 0; step < s; ++step) {
      size_t t = reverse ? s - 1 - step : step;
      Matrix z(1, 4 * h);
      kernels::matmul(z.data(), x.row(t), dir.wx.data(), 1, d, 4 * h, false);
      kernels::matmul(z.data(), h_prev.data(), dir.wh.data(), 1, h, 4 * h,
                      true);
      kernels::axpy(1.0, dir.b.data(), z.data(), 4 * h);
      dc.pre[t] = z;
      activate_gates(z, h);
      Matrix c_now(1, h), h_now(1, h);
      for (size_t j = 0; j < h; ++j) {
        double i_g = z.data()[j], f_g = z.data()[h + j];
        double g_g = z.data()[2 * h + j], o_g = z.data()[3 * h + j];
        c_now.data()[j] = f_g * c_prev.data()[j] + i_g * g_g;
        h_now.data()[j] = o_g * std::tanh(c_now.data()[j]);
      }
      dc.gates[t] = std::move(z);
      dc.cell[t] = c_now;
      dc.hidden[t] = h_now;
      c_prev = std::move(c_now);
      h_prev = std::move(h_now);
    }
  };
  run_direction(fwd, false, cache.fwd);
  run_direction(bwd, true, cache.bwd);

  cache.concat = Matrix(s, 2 * h);
  for (size_t t = 0; t < s; ++t) {
    double* row = cache.concat.row(t);
    for (size_t j = 0; j < h; ++j) {
      row[j] = cache.fwd.hidden[t].data()[j];
      row[h + j] = cache.bwd.hidden[t].data()[j];
    }
  }

  Matrix out = linear(cache.concat, proj_w, proj_b);
  cache.drop_proj = Matrix();
  if (use_dropout)
    detail::dropout_forward(out, cfg_.dropout, *dropout_rng, cache.drop_proj);
  cache.output = out;
  return out;
}

void BilstmEncoder::backward(const Matrix& d_features,
                             EncoderCache& cache_base) {
  auto& cache = dynamic_cast<BilstmCache&>(cache_base);
  size_t s = cache.output.rows();
  if (d_features.rows() != s || d_features.cols() != cfg_.hidden_dim)
    throw ContractError("feature gradient shape does not match the forward "
                        "pass output");
  size_t d = cfg_.hidden_dim;
  size_t h = cfg_.hidden_dim;

  Matrix dout = d_features;
  detail::dropout_backward(dout, cache.drop_proj);
  Matrix dconcat = linear_backward(cache.concat, proj_w, dout, g_proj_w,
                                   g_proj_b);

  Matrix dx(s, d);
  auto run_direction = [&](LstmDirection& dir, bool reverse,
                           const LstmDirectionCache& dc, size_t offset) {
    Matrix dh_carry(1, h), dc_carry(1, h);
    Matrix zero_c(1, h);
    for (size_t step = s; step-- > 0;) {
      // walk time in the opposite order of this direction's forward scan
      size_t t = reverse ? s - 1 - step : step;
      Matrix dh(1, h);
      for (size_t j = 0; j < h; ++j)
        dh.data()[j] = dconcat(t, offset + j) + dh_carry.data()[j];
      bool first_step = step == 0;
      const Matrix& c_prev =
          first_step ? zero_c : dc.cell[reverse ? t + 1 : t - 1];
      StepGrads sg =
          cell_backward(dc.gates[t], c_prev, dc.cell[t], dh, dc_carry, h);
      dc_carry = std::move(sg.dc_prev);

      kernels::matmul_tn(dir.gwx.data(), cache.embedded.row(t), sg.dz.data(),
                         d, 1, 4 * h, true);
      const Matrix& h_prev =
          first_step ? zero_c : dc.hidden[reverse ? t + 1 : t - 1];
      kernels::matmul_tn(dir.gwh.data(), h_prev.data(), sg.dz.data(), h, 1,
                         4 * h, true);
      kernels::axpy(1.0, sg.dz.data(), dir.gb.data(), 4 * h);

      kernels::matmul_nt(dx.row(t), sg.dz.data(), dir.wx.data(), 1, 4 * h, d,
                         true);
      dh_carry = Matrix(1, h);
      kernels::matmul_nt(dh_carry.data(), sg.dz.data(), dir.wh.data(), 1,
                         4 * h, h, false);
    }
  };
  run_direction(fwd, false, cache.fwd, 0);
  run_direction(bwd, true, cache.bwd, h);

  detail::dropout_backward(dx, cache.drop_embed);

  kernels::axpy(1.0, dx.row(0), g_bos_vec.data(), d);
  kernels::axpy(1.0, dx.row(s - 1), g_eos_vec.data(), d);
  for (size_t t = 0; t + 2 < s; ++t)
    kernels::axpy(1.0, dx.row(t + 1),
                  g_tok_embed.row(static_cast<size_t>(cache.token_ids[t])), d);
}

std::vector<NamedParam> BilstmEncoder::named_params() {
  return {
      {"embed.tokens", &tok_embed, &g_tok_embed},
      {"embed.bos", &bos_vec, &g_bos_vec},
      {"embed.eos", &eos_vec, &g_eos_vec},
      {"lstm.fwd.wx", &fwd.wx, &fwd.gwx},
      {"lstm.fwd.wh", &fwd.wh, &fwd.gwh},
      {"lstm.fwd.b", &fwd.b, &fwd.gb},
      {"lstm.bwd.wx", &bwd.wx, &bwd.gwx},
      {"lstm.bwd.wh", &bwd.wh, &bwd.gwh},
      {"lstm.bwd.b", &bwd.b, &bwd.gb},
      {"lstm.proj.w", &proj_w, &g_proj_w},
      {"lstm.proj.b", &proj_b, &g_proj_b},
  };
}

}  // namespace propdetect::neural
