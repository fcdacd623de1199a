#pragma once

// End-to-end task pipelines: span-identification training and prediction
// (split -> encode -> emissions -> CRF decode -> span reconstruction) and
// technique classification (exact-span samples -> encode -> funnel ->
// checkpoint-ensemble vote -> overlap resolution).

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/corpus/corpus.hpp"
#include "propdetect/crf/crf.hpp"
#include "propdetect/neural/checkpoint.hpp"
#include "propdetect/neural/encoder.hpp"
#include "propdetect/neural/heads.hpp"
#include "propdetect/segmenter/segmenter.hpp"

namespace propdetect {

enum class SplitStrategy { paragraph, sentence };

const char* split_strategy_name(SplitStrategy s);
// Accepts the long names and the table row labels "ps" / "ss".
SplitStrategy split_strategy_from_name(std::string_view name);  // ParseError

// Tagger for propaganda spans: encoder + dense emission head + linear-chain
// CRF over {outside, inside}. The split strategy recorded at train time is
// reused verbatim at predict time.
struct SiModel {
  SiModel(std::unique_ptr<neural::Encoder> enc, const Tokenizer& tok,
          SplitStrategy strategy);

  std::unique_ptr<neural::Encoder> encoder;
  neural::SiHead head;
  CrfParams crf;
  SplitStrategy split_strategy;
  const Tokenizer* tokenizer;

  // Weights plus split strategy and vocabulary, reloadable standalone.
  neural::Checkpoint to_checkpoint();
  static SiModel from_checkpoint(const neural::Checkpoint& ck,
                                 const Tokenizer& tok);  // LoadError
};

// 14-way span classifier: encoder + mean-pool funnel head.
struct TcModel {
  TcModel(std::unique_ptr<neural::Encoder> enc, const Tokenizer& tok);

  std::unique_ptr<neural::Encoder> encoder;
  neural::TcHead head;
  const Tokenizer* tokenizer;

  neural::Checkpoint to_checkpoint();
  static TcModel from_checkpoint(const neural::Checkpoint& ck,
                                 const Tokenizer& tok);  // LoadError
};

// Ordered list of fine-tuned classifier members; all share one tokenizer
// and the fixed technique indexing.
struct Ensemble {
  std::vector<TcModel> members;
};

// One classified span with the full voting record: per-member distributions,
// their mean, and the vote winner.
struct TcPrediction {
  int64_t article_id = 0;
  Span span;
  std::vector<std::vector<double>> member_probs;  // K x 14, each sums to 1
  std::vector<double> aggregate;                  // mean of members
  Technique technique = Technique::appeal_to_authority;
};

struct SiTrainConfig {
  neural::EncoderConfig encoder;  // ignored when init_from is set
  SplitStrategy split_strategy = SplitStrategy::paragraph;
  size_t epochs = 5;
  double lr = 1e-3;
  uint64_t seed = 0;
  bool freeze_encoder = false;
  const neural::Checkpoint* init_from = nullptr;  // pre-trained encoder
};

struct TcTrainConfig {
  neural::EncoderConfig encoder;  // ignored when init_from is set
  bool oversample = false;
  size_t epochs = 5;
  double lr = 1e-4;
  uint64_t seed = 0;
  bool freeze_encoder = false;
  const neural::Checkpoint* init_from = nullptr;
  std::vector<std::string>* warnings = nullptr;  // optional sink
};

// Minimizes the joint emission+CRF negative log-likelihood over segments of
// the training articles. The negative class is re-undersampled to 50/50
// every epoch with an epoch-derived seed; the returned model is the
// snapshot from the epoch with the best dev span F1.
// Errors: zero epochs -> ContractError; empty train set or no positive
// segment -> SamplingError.
SiModel train_si(const std::vector<Article>& train_articles,
                 const std::vector<SiLabel>& train_labels,
                 const std::vector<Article>& dev_articles,
                 const std::vector<SiLabel>& dev_labels,
                 const Tokenizer& tokenizer, const SiTrainConfig& cfg);

// Splits per the recorded strategy, Viterbi-decodes each segment, rebuilds
// character spans, and merges across segment boundaries with the same gap
// rule used inside segments. Output spans are article-absolute, sorted, and
// non-overlapping.
std::vector<SiLabel> predict_si(const SiModel& model, const Article& article);
std::vector<SiLabel> predict_si(const SiModel& model,
                                const std::vector<Article>& articles);

// Cross-entropy fine-tuning over exact-span samples; optional one-shot
// class oversampling; returns the best dev micro-F1 epoch. A technique
// absent from the train set is recorded as a warning, not an error.
// Errors: zero epochs -> ContractError; empty train set -> SamplingError;
// unlabeled training sample -> ContractError.
TcModel train_tc(const std::vector<ClassifiedSample>& train,
                 const std::vector<ClassifiedSample>& dev,
                 const Tokenizer& tokenizer, const TcTrainConfig& cfg);

// The 14 class probabilities for one sample (sums to 1). A sample whose
// surface yields no tokens gets the uniform distribution.
std::vector<double> predict_probs(const TcModel& model,
                                  const ClassifiedSample& sample);

// Fine-tunes one member per checkpoint on identical data; member i trains
// with seed cfg.seed + i, and member order follows checkpoint order.
// Errors: fewer than 2 checkpoints -> ContractError; duplicate checkpoint
// step fractions -> warning only.
Ensemble build_ensemble(const std::vector<neural::Checkpoint>& checkpoints,
                        const std::vector<ClassifiedSample>& train,
                        const std::vector<ClassifiedSample>& dev,
                        const Tokenizer& tokenizer, const TcTrainConfig& cfg);

struct VoteResult {
  Technique technique = Technique::appeal_to_authority;
  std::vector<double> aggregate;  // mean of the member vectors
};

// Majority vote over member argmaxes (ties inside a member take the lower
// class index). Vote ties break by the largest summed probability of the
// tied class; a residual tie takes the lowest class index.
// Errors: no members or a vector whose length is not 14 -> ContractError.
VoteResult ensemble_vote(const std::vector<std::vector<double>>& member_probs);

TcPrediction predict_one(const Ensemble& ensemble,
                         const ClassifiedSample& sample);
std::vector<TcPrediction> predict_tc(const Ensemble& ensemble,
                                     const std::vector<ClassifiedSample>& samples);

// Forbids overlapping spans from sharing a technique: within each group of
// same-technique overlapping spans, the holder of the highest aggregate
// probability keeps it and every other span moves to its best-ranked
// technique not used by any overlapping neighbor. A span whose 14 classes
// are all taken by neighbors keeps its original technique (documented
// fallback). Single ordered pass; disjoint predictions pass through.
std::vector<TcLabel> resolve_overlaps(const std::vector<TcPrediction>& preds);

// Unlabeled classification samples for detected spans, surfaces sliced
// verbatim from the article.
std::vector<ClassifiedSample> samples_from_spans(
    const Article& article, const std::vector<SiLabel>& spans);

}  // namespace propdetect
