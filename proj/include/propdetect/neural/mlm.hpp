#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "propdetect/corpus/corpus.hpp"
#include "propdetect/neural/checkpoint.hpp"
#include "propdetect/segmenter/segmenter.hpp"

namespace propdetect::neural {

// One masked sequence. original_ids keeps the whole unmasked sequence; the
// loss reads it only at mask_positions.
struct MlmBatch {
  std::vector<int> input_ids;
  std::vector<size_t> mask_positions;  // sorted, positions into the sequence
  std::vector<int> original_ids;
};

// Selects round(0.15 * maskable), at least 1, of the maskable positions
// (ids at or above the first real vocab id). Each selected position becomes
// the mask id with probability 0.8, a random real vocab id with 0.1, or
// stays unchanged with 0.1.
MlmBatch mask_for_mlm(std::span<const int> token_ids, size_t vocab_size,
                      uint64_t seed);

// llround(f * total_steps) for each fraction.
std::vector<uint64_t> checkpoint_steps(uint64_t total_steps,
                                       const std::vector<double>& fractions);

// Linear warm-up length: round(0.005 * total_steps).
uint64_t warmup_steps_for(uint64_t total_steps);

struct PretrainConfig {
  uint64_t total_steps = 2000;
  std::vector<double> checkpoint_fractions = {0.175, 0.40, 0.60, 0.75, 1.0};
  double lr = 1e-4;
  uint64_t seed = 0;
};

struct PretrainResult {
  std::vector<Checkpoint> checkpoints;  // one per fraction, in order
  double first_loss = 0.0;
  double final_loss = 0.0;
};

// Domain-adaptive masked-LM pre-training over the articles: paragraph
// segments up to max_seq_len - 2 tokens, one seeded segment per step,
// cross-entropy at masked positions, rectified-Adam with linear warm-up over
// round(0.005 * total_steps) steps. Emits a checkpoint (with the vocabulary
// embedded) at each fraction of total_steps.
PretrainResult pretrain_mlm(const std::vector<Article>& corpus,
                            const Tokenizer& tokenizer,
                            const EncoderConfig& cfg,
                            const PretrainConfig& pc);

}  // namespace propdetect::neural
