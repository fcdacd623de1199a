#include "propdetect/neural/mlm.hpp"

#include <algorithm>
#include <cmath>

#include "propdetect/neural/heads.hpp"
#include "propdetect/neural/optim.hpp"
#include "propdetect/util/errors.hpp"
#include "propdetect/util/rng.hpp"

namespace propdetect::neural {

MlmBatch mask_for_mlm(std::span<const int> token_ids, size_t vocab_size,
                      uint64_t seed) {
  if (vocab_size <= Vocab::kReserved)
    throw ContractError("vocabulary has no real tokens to substitute");

  std::vector<size_t> maskable;
  for (size_t i = 0; i < token_ids.size(); ++i)
    if (token_ids[i] >= static_cast<int>(Vocab::kReserved)) maskable.push_back(i);
  if (maskable.empty())
    throw ContractError("sequence has no maskable token (every id is "
                        "reserved)");

  size_t k = static_cast<size_t>(
      std::llround(0.15 * static_cast<double>(maskable.size())));
  k = std::max<size_t>(k, 1);

  Rng rng(seed);
  std::vector<size_t> picks = rng.sample_without_replacement(maskable.size(), k);

  MlmBatch batch;
  batch.original_ids.assign(token_ids.begin(), token_ids.end());
  batch.input_ids = batch.original_ids;
  batch.mask_positions.reserve(k);
  for (size_t p : picks) batch.mask_positions.push_back(maskable[p]);
  std::sort(batch.mask_positions.begin(), batch.mask_positions.end());

  size_t real_vocab = vocab_size - Vocab::kReserved;
  for (size_t pos : batch.mask_positions) {
    uint64_t roll = rng.below(10);
    if (roll < 8) {
      batch.input_ids[pos] = Vocab::kMaskId;
    } else if (roll == 8) {
      batch.input_ids[pos] =
          static_cast<int>(Vocab::kReserved + rng.below(real_vocab));
    }
    // roll == 9: position is selected but the id stays unchanged
  }
  return batch;
}

std::vector<uint64_t> checkpoint_steps(uint64_t total_steps,
                                       const std::vector<double>& fractions) {
  if (total_steps == 0) throw ContractError("total_steps must be positive");
  if (fractions.empty())
    throw ContractError("at least one checkpoint fraction is required");
  std::vector<uint64_t> steps;
  double prev = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0))
      throw ContractError("checkpoint fractions must lie in (0, 1]");
    if (f < prev)
      throw ContractError("checkpoint fractions must be sorted ascending");
    prev = f;
    uint64_t s = static_cast<uint64_t>(
        std::llround(f * static_cast<double>(total_steps)));
    steps.push_back(std::max<uint64_t>(s, 1));  // never before the first step
  }
  return steps;
}

uint64_t warmup_steps_for(uint64_t total_steps) {
  return static_cast<uint64_t>(
      std::llround(0.005 * static_cast<double>(total_steps)));
}

PretrainResult pretrain_mlm(const std::vector<Article>& corpus,
                            const Tokenizer& tokenizer,
                            const EncoderConfig& cfg,
                            const PretrainConfig& pc) {
  cfg.validate();
  if (corpus.empty()) throw SamplingError("cannot pre-train on an empty corpus");
  std::vector<uint64_t> emit_at = checkpoint_steps(pc.total_steps,
                                                   pc.checkpoint_fractions);

  // paragraph segments, each mapped to vocabulary ids
  std::vector<std::vector<int>> segments;
  for (const auto& article : corpus) {
    for (const auto& seg :
         split_paragraphs(article, tokenizer, cfg.max_seq_len - 2)) {
      std::vector<int> ids;
      ids.reserve(seg.tokens.size());
      bool maskable = false;
      for (const auto& tok : seg.tokens) {
        int id = tokenizer.vocab().id_of(tok.surface);
        maskable = maskable || id >= static_cast<int>(Vocab::kReserved);
        ids.push_back(id);
      }
      if (maskable) segments.push_back(std::move(ids));
    }
  }
  if (segments.empty())
    throw SamplingError("corpus has no segment with a maskable token");

  Rng init_rng(Rng::mix(pc.seed, 1));
  auto encoder = make_initialized_encoder(cfg, tokenizer.vocab(), init_rng);
  MlmHead head(cfg.hidden_dim, cfg.vocab_size);
  head.init(init_rng);

  auto named = encoder->named_params();
  auto head_named = head.named_params("mlm_head.");
  named.insert(named.end(), head_named.begin(), head_named.end());

  RAdamConfig oc;
  oc.lr = pc.lr;
  oc.warmup_steps = warmup_steps_for(pc.total_steps);
  RAdam opt(to_param_refs(named), oc);

  Rng data_rng(Rng::mix(pc.seed, 2));
  Rng dropout_rng(Rng::mix(pc.seed, 3));
  uint64_t mask_base = Rng::mix(pc.seed, 4);
  std::string vocab_text = tokenizer.vocab().to_file();

  PretrainResult result;
  auto cache = encoder->make_cache();
  size_t next_emit = 0;
  for (uint64_t step = 1; step <= pc.total_steps; ++step) {
    const auto& ids = segments[data_rng.below(segments.size())];
    MlmBatch batch = mask_for_mlm(ids, cfg.vocab_size,
                                  Rng::mix(mask_base, step));

    opt.zero_grad();
    Rng* drop = cfg.dropout > 0.0 ? &dropout_rng : nullptr;
    Matrix feats = encoder->forward(batch.input_ids, *cache, drop);
    Matrix d_feats;
    double loss = head.loss_and_grad(feats, batch.mask_positions,
                                     batch.original_ids, d_feats);
    encoder->backward(d_feats, *cache);
    opt.step();

    if (step == 1) result.first_loss = loss;
    if (step == pc.total_steps) result.final_loss = loss;

    while (next_emit < emit_at.size() && emit_at[next_emit] == step) {
      Checkpoint ck;
      ck.config = cfg;
      ck.step = step;
      ck.step_fraction = pc.checkpoint_fractions[next_emit];
      ck.metadata["kind"] = "mlm-pretrain";
      ck.metadata["vocab"] = vocab_text;
      store_params(ck, encoder->named_params(), "encoder.");
      store_params(ck, head.named_params(""), "mlm_head.");
      result.checkpoints.push_back(std::move(ck));
      ++next_emit;
    }
  }
  return result;
}

}  // namespace propdetect::neural
