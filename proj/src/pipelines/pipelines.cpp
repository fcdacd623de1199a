#include "propdetect/pipelines/pipelines.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "propdetect/eval/eval.hpp"
#include "propdetect/kernels/kernels.hpp"
#include "propdetect/neural/optim.hpp"
#include "propdetect/util/errors.hpp"

namespace propdetect {

using neural::Checkpoint;
using neural::Encoder;
using neural::NamedParam;
using neural::ParamRef;
using neural::RAdam;
using neural::RAdamConfig;

const char* split_strategy_name(SplitStrategy s) {
  return s == SplitStrategy::paragraph ? "paragraph" : "sentence";
}

SplitStrategy split_strategy_from_name(std::string_view name) {
  if (name == "paragraph" || name == "ps") return SplitStrategy::paragraph;
  if (name == "sentence" || name == "ss") return SplitStrategy::sentence;
  throw ParseError("unknown split strategy '" + std::string(name) + "'");
}

namespace {

std::vector<Segment> split_by(const Article& article, const Tokenizer& tok,
                              SplitStrategy strategy, size_t max_tokens) {
  return strategy == SplitStrategy::paragraph
             ? split_paragraphs(article, tok, max_tokens)
             : split_sentences(article, tok, max_tokens);
}

std::vector<int> to_ids(const std::vector<Token>& tokens, const Vocab& vocab,
                        size_t limit) {
  std::vector<int> ids;
  ids.reserve(std::min(tokens.size(), limit));
  for (const auto& t : tokens) {
    if (ids.size() == limit) break;
    ids.push_back(vocab.id_of(t.surface));
  }
  return ids;
}

size_t argmax_lowest(const std::vector<double>& v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// CRF parameter gradients live outside the NamedParam world, so the
// optimizer gets raw slices.
struct CrfGradBuffers {
  Matrix transitions{2, 2};
  std::vector<double> start = std::vector<double>(2, 0.0);
  std::vector<double> end = std::vector<double>(2, 0.0);
};

void append_crf_refs(std::vector<ParamRef>& refs, CrfParams& crf,
                     CrfGradBuffers& g) {
  refs.push_back({"crf.transitions", crf.transitions.data(),
                  g.transitions.data(), 4});
  refs.push_back({"crf.start", crf.start_scores.data(), g.start.data(), 2});
  refs.push_back({"crf.end", crf.end_scores.data(), g.end.data(), 2});
}

void store_matrix(Checkpoint& ck, const std::string& name, const Matrix& m) {
  ck.tensors[name] = m;
}

const Matrix& fetch_tensor(const Checkpoint& ck, const std::string& name,
                           size_t rows, size_t cols) {
  auto it = ck.tensors.find(name);
  if (it == ck.tensors.end())
    throw LoadError("checkpoint missing tensor '" + name + "'");
  if (it->second.rows() != rows || it->second.cols() != cols)
    throw LoadError("tensor '" + name + "' has shape " +
                    std::to_string(it->second.rows()) + "x" +
                    std::to_string(it->second.cols()) + ", expected " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  return it->second;
}

void require_kind(const Checkpoint& ck, const std::string& kind,
                  const std::string& what) {
  auto it = ck.metadata.find("kind");
  if (it == ck.metadata.end() || it->second != kind)
    throw LoadError("checkpoint is not " + what);
}

std::unique_ptr<Encoder> starting_encoder(const neural::EncoderConfig& fresh,
                                          const Checkpoint* init_from,
                                          const Vocab& vocab, Rng& init_rng) {
  if (init_from) return neural::encoder_from_checkpoint(*init_from);
  return neural::make_initialized_encoder(fresh, vocab, init_rng);
}

}  // namespace

SiModel::SiModel(std::unique_ptr<Encoder> enc, const Tokenizer& tok,
                 SplitStrategy strategy)
    : encoder(std::move(enc)),
      head(encoder->config().hidden_dim),
      crf(2),
      split_strategy(strategy),
      tokenizer(&tok) {}

Checkpoint SiModel::to_checkpoint() {
  Checkpoint ck;
  ck.config = encoder->config();
  ck.metadata["kind"] = "si-model";
  ck.metadata["split_strategy"] = split_strategy_name(split_strategy);
  ck.metadata["vocab"] = tokenizer->vocab().to_file();
  store_params(ck, encoder->named_params(), "encoder.");
  store_params(ck, head.named_params(""), "si_head.");
  store_matrix(ck, "crf.transitions", crf.transitions);
  Matrix se(1, 2);
  se.data()[0] = crf.start_scores[0];
  se.data()[1] = crf.start_scores[1];
  store_matrix(ck, "crf.start", se);
  se.data()[0] = crf.end_scores[0];
  se.data()[1] = crf.end_scores[1];
  store_matrix(ck, "crf.end", se);
  return ck;
}

SiModel SiModel::from_checkpoint(const Checkpoint& ck, const Tokenizer& tok) {
  require_kind(ck, "si-model", "a span model");
  auto it = ck.metadata.find("split_strategy");
  if (it == ck.metadata.end())
    throw LoadError("span model checkpoint lacks a split_strategy");
  SiModel model(neural::encoder_from_checkpoint(ck), tok,
                split_strategy_from_name(it->second));
  load_params(ck, model.head.named_params(""), "si_head.");
  model.crf.transitions = fetch_tensor(ck, "crf.transitions", 2, 2);
  const Matrix& s = fetch_tensor(ck, "crf.start", 1, 2);
  model.crf.start_scores = {s.data()[0], s.data()[1]};
  const Matrix& e = fetch_tensor(ck, "crf.end", 1, 2);
  model.crf.end_scores = {e.data()[0], e.data()[1]};
  return model;
}

TcModel::TcModel(std::unique_ptr<Encoder> enc, const Tokenizer& tok)
    : encoder(std::move(enc)),
      head(encoder->config().hidden_dim),
      tokenizer(&tok) {}

Checkpoint TcModel::to_checkpoint() {
  Checkpoint ck;
  ck.config = encoder->config();
  ck.metadata["kind"] = "tc-model";
  ck.metadata["vocab"] = tokenizer->vocab().to_file();
  store_params(ck, encoder->named_params(), "encoder.");
  store_params(ck, head.named_params(""), "tc_head.");
  return ck;
}

TcModel TcModel::from_checkpoint(const Checkpoint& ck, const Tokenizer& tok) {
  require_kind(ck, "tc-model", "a technique model");
  TcModel model(neural::encoder_from_checkpoint(ck), tok);
  load_params(ck, model.head.named_params(""), "tc_head.");
  return model;
}

SiModel train_si(const std::vector<Article>& train_articles,
                 const std::vector<SiLabel>& train_labels,
                 const std::vector<Article>& dev_articles,
                 const std::vector<SiLabel>& dev_labels,
                 const Tokenizer& tokenizer, const SiTrainConfig& cfg) {
  if (cfg.epochs == 0) throw ContractError("cannot train for zero epochs");
  if (train_articles.empty())
    throw SamplingError("cannot train on an empty article set");

  Rng init_rng(Rng::mix(cfg.seed, 1));
  SiModel model(starting_encoder(cfg.encoder, cfg.init_from, tokenizer.vocab(),
                                 init_rng),
                tokenizer, cfg.split_strategy);
  model.head.init(init_rng);

  size_t max_tokens = model.encoder->config().max_seq_len - 2;

  std::unordered_map<int64_t, std::vector<Span>> gold;
  for (const auto& l : train_labels) gold[l.article_id].push_back(l.span);

  struct SiExample {
    std::vector<int> ids;
    LabelSeq labels;
  };
  std::vector<SiExample> examples;
  std::vector<bool> is_positive;
  static const std::vector<Span> kNoSpans;
  for (const auto& article : train_articles) {
    auto git = gold.find(article.id);
    const auto& spans = git == gold.end() ? kNoSpans : git->second;
    for (const auto& seg :
         split_by(article, tokenizer, cfg.split_strategy, max_tokens)) {
      if (seg.tokens.empty()) continue;
      SiExample ex;
      ex.ids = to_ids(seg.tokens, tokenizer.vocab(), max_tokens);
      ex.labels = project_labels(seg, spans);
      bool positive =
          std::find(ex.labels.begin(), ex.labels.end(), 1) != ex.labels.end();
      examples.push_back(std::move(ex));
      is_positive.push_back(positive);
    }
  }
  if (std::find(is_positive.begin(), is_positive.end(), true) ==
      is_positive.end())
    throw SamplingError("training corpus has no positive segment");

  CrfGradBuffers crf_bufs;
  std::vector<ParamRef> refs;
  if (!cfg.freeze_encoder) {
    auto er = to_param_refs(model.encoder->named_params());
    refs.insert(refs.end(), er.begin(), er.end());
  }
  auto hr = to_param_refs(model.head.named_params("si_head."));
  refs.insert(refs.end(), hr.begin(), hr.end());
  append_crf_refs(refs, model.crf, crf_bufs);

  RAdamConfig oc;
  oc.lr = cfg.lr;
  RAdam opt(refs, oc);

  Rng dropout_rng(Rng::mix(cfg.seed, 3));
  bool use_dropout = model.encoder->config().dropout > 0.0;

  auto cache = model.encoder->make_cache();
  neural::SiHeadCache hcache;
  CrfGrads crf_grads;

  std::optional<Checkpoint> best;
  double best_f1 = -1.0;

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto order = undersample_negative_indices(
        is_positive, Rng::mix(cfg.seed, 100 + epoch));
    for (size_t idx : order) {
      const auto& ex = examples[idx];
      opt.zero_grad();
      Rng* drop = use_dropout ? &dropout_rng : nullptr;
      Matrix feats = model.encoder->forward(ex.ids, *cache, drop);
      Matrix emissions = model.head.forward(feats, hcache);
      nll_and_grad(emissions, model.crf, ex.labels, crf_grads);
      kernels::axpy(1.0, crf_grads.d_transitions.data(),
                    crf_bufs.transitions.data(), 4);
      for (size_t i = 0; i < 2; ++i) {
        crf_bufs.start[i] += crf_grads.d_start[i];
        crf_bufs.end[i] += crf_grads.d_end[i];
      }
      Matrix d_feats = model.head.backward(crf_grads.d_emissions, hcache);
      if (!cfg.freeze_encoder) model.encoder->backward(d_feats, *cache);
      opt.step();
    }

    double f1 = si_score(predict_si(model, dev_articles), dev_labels).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = model.to_checkpoint();
    }
  }
  return SiModel::from_checkpoint(*best, tokenizer);
}

std::vector<SiLabel> predict_si(const SiModel& model, const Article& article) {
  size_t max_tokens = model.encoder->config().max_seq_len - 2;
  auto cache = model.encoder->make_cache();
  neural::SiHeadCache hcache;
  std::vector<Span> spans;
  for (const auto& seg : split_by(article, *model.tokenizer,
                                  model.split_strategy, max_tokens)) {
    if (seg.tokens.empty()) continue;
    auto ids = to_ids(seg.tokens, model.tokenizer->vocab(), max_tokens);
    Matrix feats = model.encoder->forward(ids, *cache);
    Matrix emissions = model.head.forward(feats, hcache);
    LabelSeq labels = viterbi(emissions, model.crf);
    for (const Span& s : reconstruct_spans(article, seg, labels))
      spans.push_back(s);
  }
  spans = merge_adjacent_spans(article.text, std::move(spans));
  std::vector<SiLabel> out;
  out.reserve(spans.size());
  for (const Span& s : spans) out.push_back({article.id, s});
  return out;
}

std::vector<SiLabel> predict_si(const SiModel& model,
                                const std::vector<Article>& articles) {
  std::vector<SiLabel> out;
  for (const auto& a : articles) {
    auto one = predict_si(model, a);
    out.insert(out.end(), one.begin(), one.end());
  }
  return out;
}

namespace {

std::vector<int> sample_ids(const ClassifiedSample& sample,
                            const Tokenizer& tokenizer, size_t max_tokens) {
  return to_ids(tokenizer.tokenize(sample.surface), tokenizer.vocab(),
                max_tokens);
}

int require_technique(const ClassifiedSample& s, const char* role) {
  if (!s.technique)
    throw ContractError(std::string(role) +
                        " sample carries no technique label");
  return static_cast<int>(*s.technique);
}

}  // namespace

TcModel train_tc(const std::vector<ClassifiedSample>& train,
                 const std::vector<ClassifiedSample>& dev,
                 const Tokenizer& tokenizer, const TcTrainConfig& cfg) {
  if (cfg.epochs == 0) throw ContractError("cannot train for zero epochs");
  if (train.empty())
    throw SamplingError("cannot train a classifier on zero samples");

  std::array<size_t, kTechniqueCount> counts{};
  for (const auto& s : train) counts[require_technique(s, "training")]++;
  for (size_t c = 0; c < kTechniqueCount; ++c)
    if (counts[c] == 0 && cfg.warnings)
      cfg.warnings->push_back(
          std::string("technique '") +
          technique_name(technique_from_index(c)) +
          "' is absent from the training set");

  std::vector<ClassifiedSample> samples =
      cfg.oversample ? oversample_classes(train, Rng::mix(cfg.seed, 50))
                     : train;

  Rng init_rng(Rng::mix(cfg.seed, 1));
  TcModel model(starting_encoder(cfg.encoder, cfg.init_from, tokenizer.vocab(),
                                 init_rng),
                tokenizer);
  model.head.init(init_rng);

  size_t max_tokens = model.encoder->config().max_seq_len - 2;

  std::vector<ParamRef> refs;
  if (!cfg.freeze_encoder) {
    auto er = to_param_refs(model.encoder->named_params());
    refs.insert(refs.end(), er.begin(), er.end());
  }
  auto hr = to_param_refs(model.head.named_params("tc_head."));
  refs.insert(refs.end(), hr.begin(), hr.end());

  RAdamConfig oc;
  oc.lr = cfg.lr;
  RAdam opt(refs, oc);

  Rng dropout_rng(Rng::mix(cfg.seed, 3));
  bool use_dropout = model.encoder->config().dropout > 0.0;

  std::vector<TcLabel> dev_gold;
  for (const auto& s : dev)
    dev_gold.push_back({s.article_id,
                        technique_from_index(require_technique(s, "dev")),
                        s.span});

  auto cache = model.encoder->make_cache();
  neural::TcHeadCache hcache;
  Matrix d_feats;

  std::optional<Checkpoint> best;
  double best_f1 = -1.0;

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng epoch_rng(Rng::mix(cfg.seed, 100 + epoch));
    epoch_rng.shuffle(order);

    for (size_t idx : order) {
      const auto& s = samples[idx];
      auto ids = sample_ids(s, tokenizer, max_tokens);
      if (ids.empty()) continue;  // surface with no tokens carries no signal
      opt.zero_grad();
      Rng* drop = use_dropout ? &dropout_rng : nullptr;
      Matrix feats = model.encoder->forward(ids, *cache, drop);
      model.head.forward(feats, hcache);
      model.head.backward_ce(static_cast<int>(*s.technique), hcache, d_feats);
      if (!cfg.freeze_encoder) model.encoder->backward(d_feats, *cache);
      opt.step();
    }

    std::vector<TcLabel> dev_pred;
    dev_pred.reserve(dev.size());
    for (const auto& s : dev) {
      size_t c = argmax_lowest(predict_probs(model, s));
      dev_pred.push_back({s.article_id, technique_from_index(c), s.span});
    }
    double f1 = tc_micro_f1(dev_pred, dev_gold);
    if (f1 > best_f1) {
      best_f1 = f1;
      best = model.to_checkpoint();
    }
  }
  return TcModel::from_checkpoint(*best, tokenizer);
}

std::vector<double> predict_probs(const TcModel& model,
                                  const ClassifiedSample& sample) {
  size_t max_tokens = model.encoder->config().max_seq_len - 2;
  auto ids = sample_ids(sample, *model.tokenizer, max_tokens);
  if (ids.empty())
    return std::vector<double>(kTechniqueCount, 1.0 / kTechniqueCount);
  auto cache = model.encoder->make_cache();
  neural::TcHeadCache hcache;
  Matrix feats = model.encoder->forward(ids, *cache);
  return model.head.forward(feats, hcache);
}

Ensemble build_ensemble(const std::vector<Checkpoint>& checkpoints,
                        const std::vector<ClassifiedSample>& train,
                        const std::vector<ClassifiedSample>& dev,
                        const Tokenizer& tokenizer, const TcTrainConfig& cfg) {
  if (checkpoints.size() < 2)
    throw ContractError("an ensemble needs at least two checkpoints, got " +
                        std::to_string(checkpoints.size()));

  if (cfg.warnings) {
    for (size_t i = 0; i < checkpoints.size(); ++i)
      for (size_t j = i + 1; j < checkpoints.size(); ++j)
        if (checkpoints[i].step_fraction == checkpoints[j].step_fraction)
          cfg.warnings->push_back(
              "checkpoints " + std::to_string(i) + " and " +
              std::to_string(j) + " share step fraction " +
              std::to_string(checkpoints[i].step_fraction));
  }

  Ensemble ensemble;
  ensemble.members.reserve(checkpoints.size());
  for (size_t i = 0; i < checkpoints.size(); ++i) {
    TcTrainConfig member_cfg = cfg;
    member_cfg.seed = cfg.seed + i;
    member_cfg.init_from = &checkpoints[i];
    if (i > 0) member_cfg.warnings = nullptr;  // warn once, not per member
    ensemble.members.push_back(train_tc(train, dev, tokenizer, member_cfg));
  }
  return ensemble;
}

VoteResult ensemble_vote(
    const std::vector<std::vector<double>>& member_probs) {
  if (member_probs.empty())
    throw ContractError("ensemble vote needs at least one member");
  for (const auto& v : member_probs)
    if (v.size() != kTechniqueCount)
      throw ContractError("member probability vector has length " +
                          std::to_string(v.size()) + ", expected " +
                          std::to_string(kTechniqueCount));

  std::array<size_t, kTechniqueCount> votes{};
  std::array<double, kTechniqueCount> sums{};
  for (const auto& v : member_probs) {
    votes[argmax_lowest(v)]++;
    for (size_t c = 0; c < kTechniqueCount; ++c) sums[c] += v[c];
  }

  size_t winner = 0;
  for (size_t c = 1; c < kTechniqueCount; ++c) {
    if (votes[c] > votes[winner] ||
        (votes[c] == votes[winner] && sums[c] > sums[winner]))
      winner = c;
  }

  VoteResult result;
  result.technique = technique_from_index(winner);
  result.aggregate.assign(kTechniqueCount, 0.0);
  double inv = 1.0 / static_cast<double>(member_probs.size());
  for (size_t c = 0; c < kTechniqueCount; ++c)
    result.aggregate[c] = sums[c] * inv;
  return result;
}

TcPrediction predict_one(const Ensemble& ensemble,
                         const ClassifiedSample& sample) {
  if (ensemble.members.empty())
    throw ContractError("ensemble has no members");
  TcPrediction pred;
  pred.article_id = sample.article_id;
  pred.span = sample.span;
  pred.member_probs.reserve(ensemble.members.size());
  for (const auto& m : ensemble.members)
    pred.member_probs.push_back(predict_probs(m, sample));
  VoteResult vote = ensemble_vote(pred.member_probs);
  pred.aggregate = std::move(vote.aggregate);
  pred.technique = vote.technique;
  return pred;
}

std::vector<TcPrediction> predict_tc(
    const Ensemble& ensemble, const std::vector<ClassifiedSample>& samples) {
  std::vector<TcPrediction> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(predict_one(ensemble, s));
  return out;
}

std::vector<TcLabel> resolve_overlaps(const std::vector<TcPrediction>& preds) {
  for (const auto& p : preds)
    if (p.aggregate.size() != kTechniqueCount)
      throw ContractError("prediction lacks a " +
                          std::to_string(kTechniqueCount) +
                          "-class aggregate vector");

  std::vector<size_t> order(preds.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& pa = preds[a];
    const auto& pb = preds[b];
    if (pa.article_id != pb.article_id) return pa.article_id < pb.article_id;
    if (pa.span.start != pb.span.start) return pa.span.start < pb.span.start;
    if (pa.span.end != pb.span.end) return pa.span.end < pb.span.end;
    return a < b;
  });
  std::vector<size_t> rank(preds.size());
  for (size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos;

  auto overlaps = [&](size_t a, size_t b) {
    const auto& pa = preds[a];
    const auto& pb = preds[b];
    return pa.article_id == pb.article_id && pa.span.start < pb.span.end &&
           pb.span.start < pa.span.end;
  };

  std::vector<size_t> tech(preds.size());
  for (size_t i = 0; i < preds.size(); ++i)
    tech[i] = static_cast<size_t>(preds[i].technique);

  for (size_t pos = 0; pos < order.size(); ++pos) {
    size_t i = order[pos];
    size_t t = tech[i];

    // displaced when an overlapping same-technique neighbor outranks this
    // span on the disputed class (earlier sort position breaks exact ties)
    bool displaced = false;
    for (size_t j = 0; j < preds.size() && !displaced; ++j) {
      if (j == i || tech[j] != t || !overlaps(i, j)) continue;
      double mine = preds[i].aggregate[t];
      double theirs = preds[j].aggregate[t];
      displaced = theirs > mine || (theirs == mine && rank[j] < rank[i]);
    }
    if (!displaced) continue;

    std::array<bool, kTechniqueCount> used{};
    for (size_t j = 0; j < preds.size(); ++j)
      if (j != i && overlaps(i, j)) used[tech[j]] = true;

    std::array<size_t, kTechniqueCount> ranking;
    std::iota(ranking.begin(), ranking.end(), size_t{0});
    std::sort(ranking.begin(), ranking.end(), [&](size_t a, size_t b) {
      double pa = preds[i].aggregate[a];
      double pb = preds[i].aggregate[b];
      if (pa != pb) return pa > pb;
      return a < b;
    });
    for (size_t candidate : ranking) {
      if (used[candidate]) continue;
      tech[i] = candidate;
      break;
    }
    // every class excluded: tech[i] still holds the original technique
  }

  std::vector<TcLabel> out;
  out.reserve(preds.size());
  for (size_t pos = 0; pos < order.size(); ++pos) {
    size_t i = order[pos];
    out.push_back({preds[i].article_id, technique_from_index(tech[i]),
                   preds[i].span});
  }
  return out;
}

std::vector<ClassifiedSample> samples_from_spans(
    const Article& article, const std::vector<SiLabel>& spans) {
  std::vector<ClassifiedSample> out;
  out.reserve(spans.size());
  for (const auto& label : spans) {
    if (label.article_id != article.id)
      throw ContractError("span for article " +
                          std::to_string(label.article_id) +
                          " applied to article " + std::to_string(article.id));
    if (label.span.start >= label.span.end ||
        label.span.end > article.text.size())
      throw ContractError("span [" + std::to_string(label.span.start) + ", " +
                          std::to_string(label.span.end) +
                          ") outside article " + std::to_string(article.id));
    ClassifiedSample s;
    s.article_id = article.id;
    s.span = label.span;
    s.surface = article.text.substr(label.span.start, label.span.length());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace propdetect
