#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "propdetect/eval/eval.hpp"
#include "propdetect/neural/mlm.hpp"
#include "propdetect/pipelines/pipelines.hpp"
#include "propdetect/synth/synth.hpp"
#include "propdetect/util/errors.hpp"
#include "propdetect/util/rng.hpp"

using namespace propdetect;
using namespace propdetect::neural;

namespace {

EncoderConfig small_cfg(size_t vocab = 64) {
  EncoderConfig cfg;
  cfg.vocab_size = vocab;
  cfg.hidden_dim = 32;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.max_seq_len = 130;
  return cfg;
}

// Probability vector with explicit masses on a few classes; the remainder is
// spread evenly over the untouched classes.
std::vector<double> probs_with(
    const std::vector<std::pair<size_t, double>>& masses) {
  std::vector<double> v(kTechniqueCount, -1.0);
  double used = 0.0;
  for (const auto& [c, p] : masses) {
    v[c] = p;
    used += p;
  }
  double rest = (1.0 - used) / static_cast<double>(kTechniqueCount -
                                                   masses.size());
  for (auto& x : v)
    if (x < 0.0) x = rest;
  return v;
}

// Keeps gold labels whose article ids appear in the article set.
template <typename L>
std::vector<L> labels_for(const std::vector<L>& labels,
                          const std::vector<Article>& articles) {
  std::set<int64_t> ids;
  for (const auto& a : articles) ids.insert(a.id);
  std::vector<L> out;
  for (const auto& l : labels)
    if (ids.count(l.article_id)) out.push_back(l);
  return out;
}

std::vector<ClassifiedSample> synth_samples(const SynthCorpus& corpus,
                                            const std::vector<Article>& subset) {
  std::vector<ClassifiedSample> out;
  for (const auto& a : subset) {
    std::vector<TcLabel> mine;
    for (const auto& l : corpus.tc_labels)
      if (l.article_id == a.id) mine.push_back(l);
    auto samples = extract_exact_spans(a, mine);
    out.insert(out.end(), samples.begin(), samples.end());
  }
  return out;
}

// Forces the CRF to emit the given label everywhere regardless of features.
void rig_crf(CrfParams& crf, int label) {
  int other = 1 - label;
  crf.start_scores[label] = 8.0;
  crf.start_scores[other] = -8.0;
  crf.transitions.fill(-8.0);
  crf.transitions(label, label) = 8.0;
}

SiModel rigged_model(const Tokenizer& tok, int label, size_t max_seq_len) {
  EncoderConfig cfg = small_cfg();
  cfg.hidden_dim = 8;
  cfg.max_seq_len = max_seq_len;
  auto enc = make_encoder(cfg);
  Rng rng(1);
  enc->init(rng);
  SiModel model(std::move(enc), tok, SplitStrategy::paragraph);
  model.head.w1.zero();
  model.head.b1.zero();
  model.head.w2.zero();
  model.head.b2.zero();
  rig_crf(model.crf, label);
  return model;
}

size_t vote_index(const std::vector<std::vector<double>>& members) {
  return static_cast<size_t>(ensemble_vote(members).technique);
}

}  // namespace

TEST_CASE("split strategy names accept the table row labels") {
  CHECK(split_strategy_from_name("ps") == SplitStrategy::paragraph);
  CHECK(split_strategy_from_name("paragraph") == SplitStrategy::paragraph);
  CHECK(split_strategy_from_name("ss") == SplitStrategy::sentence);
  CHECK(split_strategy_from_name("sentence") == SplitStrategy::sentence);
  CHECK(std::string(split_strategy_name(SplitStrategy::sentence)) ==
        "sentence");
  CHECK_THROWS_AS(split_strategy_from_name("pz"), ParseError);
}

TEST_CASE("synthetic corpus spans slice to trigger runs") {
  SynthConfig sc;
  sc.articles = 50;
  sc.seed = 9;
  SynthCorpus corpus = make_synth_corpus(sc);

  REQUIRE(corpus.articles.size() == 50);
  REQUIRE(corpus.si_labels.size() == corpus.tc_labels.size());
  validate_against(corpus.si_labels, corpus.articles);
  validate_against(corpus.tc_labels, corpus.articles);

  std::array<size_t, kTechniqueCount> counts{};
  for (size_t i = 0; i < corpus.tc_labels.size(); ++i) {
    const auto& tc = corpus.tc_labels[i];
    CHECK(corpus.si_labels[i].span == tc.span);
    CHECK(corpus.si_labels[i].article_id == tc.article_id);
    counts[static_cast<size_t>(tc.technique)]++;

    const Article* art = nullptr;
    for (const auto& a : corpus.articles)
      if (a.id == tc.article_id) art = &a;
    REQUIRE(art != nullptr);
    std::u32string surface =
        art->text.substr(tc.span.start, tc.span.length());
    std::u32string trigger = synth_trigger(tc.technique);
    // run = 1..3 copies of the trigger joined by single spaces
    CHECK(surface.substr(0, trigger.size()) == trigger);
    CHECK((surface.size() + 1) % (trigger.size() + 1) == 0);
    for (size_t pos = 0; pos < surface.size(); pos += trigger.size() + 1)
      CHECK(surface.substr(pos, trigger.size()) == trigger);
  }
  for (size_t c = 0; c < kTechniqueCount; ++c) CHECK(counts[c] > 0);

  // per-article spans are sorted and disjoint
  for (const auto& a : corpus.articles) {
    size_t prev_end = 0;
    for (const auto& l : corpus.si_labels)
      if (l.article_id == a.id) {
        CHECK(l.span.start >= prev_end);
        prev_end = l.span.end;
      }
  }

  CHECK(make_synth_corpus(sc).articles[0].text == corpus.articles[0].text);
  SynthConfig other = sc;
  other.seed = 10;
  CHECK(make_synth_corpus(other).articles[0].text != corpus.articles[0].text);
}

TEST_CASE("rigged CRF turns predict_si into all-or-nothing tagging") {
  std::vector<Article> seedtext{{1, U"hello there world. more words here"}};
  RuleTokenizer tok(Vocab::build(seedtext, 50));

  SiModel zeros = rigged_model(tok, 0, 130);
  Article article{7, U"hello there world."};
  CHECK(predict_si(zeros, article).empty());

  SiModel ones = rigged_model(tok, 1, 130);
  auto spans = predict_si(ones, article);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].article_id == 7);
  CHECK(spans[0].span == Span{0, 18});  // first token start .. last token end

  // all-1 over several paragraphs: the paragraph gaps hold no word
  // characters, so the per-paragraph spans fuse into one
  Article multi{8, U"hello there world.\n\nmore words here\n\nhello again"};
  auto many = predict_si(ones, multi);
  REQUIRE(many.size() == 1);
  CHECK(many[0].span == Span{0, multi.text.size()});
}

TEST_CASE("a tagged run crossing a window cut merges back into one span") {
  // 12 tokens, window of 8; the cut lands after the comma (last punctuation
  // inside the window), leaving only ", " between the two segment spans
  std::vector<Article> seedtext{
      {1, U"alpha bravo candle delta echo forest gravel, hotel india jumbo kite"}};
  RuleTokenizer tok(Vocab::build(seedtext, 50));
  SiModel ones = rigged_model(tok, 1, 10);  // max 8 tokens per segment

  Article article = seedtext[0];
  auto spans = predict_si(ones, article);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0].span == Span{0, article.text.size()});
}

TEST_CASE("train_si rejects unusable setups") {
  SynthConfig sc;
  sc.articles = 4;
  sc.seed = 2;
  SynthCorpus corpus = make_synth_corpus(sc);
  RuleTokenizer tok(Vocab::build(corpus.articles, 100));
  SiTrainConfig cfg;
  cfg.encoder = small_cfg();

  SiTrainConfig zero = cfg;
  zero.epochs = 0;
  CHECK_THROWS_AS(train_si(corpus.articles, corpus.si_labels, {}, {}, tok,
                           zero),
                  ContractError);

  CHECK_THROWS_AS(train_si({}, {}, {}, {}, tok, cfg), SamplingError);

  // articles with no labeled span anywhere -> no positive segment
  CHECK_THROWS_AS(train_si(corpus.articles, {}, {}, {}, tok, cfg),
                  SamplingError);
}

TEST_CASE("span tagger learns the synthetic trigger lexicon") {
  SynthConfig sc;
  sc.articles = 200;
  sc.seed = 5;
  SynthCorpus corpus = make_synth_corpus(sc);

  std::vector<Article> train_articles(corpus.articles.begin(),
                                      corpus.articles.begin() + 160);
  std::vector<Article> dev_articles(corpus.articles.begin() + 160,
                                    corpus.articles.end());
  auto train_labels = labels_for(corpus.si_labels, train_articles);
  auto dev_labels = labels_for(corpus.si_labels, dev_articles);

  RuleTokenizer tok(Vocab::build(corpus.articles, 100));
  SiTrainConfig cfg;
  cfg.encoder = small_cfg();
  cfg.split_strategy = SplitStrategy::paragraph;
  cfg.epochs = 5;
  cfg.lr = 1e-3;
  cfg.seed = 1;

  SiModel model = train_si(train_articles, train_labels, dev_articles,
                           dev_labels, tok, cfg);
  CHECK(model.split_strategy == SplitStrategy::paragraph);

  auto preds = predict_si(model, dev_articles);
  double f1 = si_score(preds, dev_labels).f1;
  CHECK(f1 >= 0.95);

  // predictions respect span discipline
  size_t prev_end = 0;
  int64_t prev_article = -1;
  for (const auto& l : preds) {
    if (l.article_id != prev_article) {
      prev_article = l.article_id;
      prev_end = 0;
    }
    CHECK(l.span.start >= prev_end);
    CHECK(l.span.start < l.span.end);
    prev_end = l.span.end;
  }

  // weights survive the checkpoint round trip bit-exactly
  Checkpoint ck = model.to_checkpoint();
  Checkpoint reloaded_ck = load_checkpoint(save_checkpoint(ck));
  SiModel reloaded = SiModel::from_checkpoint(reloaded_ck, tok);
  CHECK(reloaded.split_strategy == model.split_strategy);
  CHECK(emit_si_predictions(predict_si(reloaded, dev_articles)) ==
        emit_si_predictions(preds));

  CHECK_THROWS_AS(TcModel::from_checkpoint(ck, tok), LoadError);
}

TEST_CASE("si training is seed deterministic") {
  SynthConfig sc;
  sc.articles = 30;
  sc.seed = 21;
  SynthCorpus corpus = make_synth_corpus(sc);
  std::vector<Article> train_articles(corpus.articles.begin(),
                                      corpus.articles.begin() + 24);
  std::vector<Article> dev_articles(corpus.articles.begin() + 24,
                                    corpus.articles.end());
  auto train_labels = labels_for(corpus.si_labels, train_articles);
  auto dev_labels = labels_for(corpus.si_labels, dev_articles);

  RuleTokenizer tok(Vocab::build(corpus.articles, 100));
  SiTrainConfig cfg;
  cfg.encoder = small_cfg();
  cfg.encoder.hidden_dim = 16;
  cfg.epochs = 2;
  cfg.seed = 4;

  SiModel a = train_si(train_articles, train_labels, dev_articles, dev_labels,
                       tok, cfg);
  SiModel b = train_si(train_articles, train_labels, dev_articles, dev_labels,
                       tok, cfg);
  CHECK(save_checkpoint(a.to_checkpoint()) ==
        save_checkpoint(b.to_checkpoint()));
  CHECK(emit_si_predictions(predict_si(a, dev_articles)) ==
        emit_si_predictions(predict_si(b, dev_articles)));
}

TEST_CASE("train_tc rejects unusable setups and records absent classes") {
  SynthConfig sc;
  sc.articles = 20;
  sc.seed = 6;
  SynthCorpus corpus = make_synth_corpus(sc);
  RuleTokenizer tok(Vocab::build(corpus.articles, 100));
  auto samples = synth_samples(corpus, corpus.articles);

  TcTrainConfig cfg;
  cfg.encoder = small_cfg();

  TcTrainConfig zero = cfg;
  zero.epochs = 0;
  CHECK_THROWS_AS(train_tc(samples, {}, tok, zero), ContractError);
  CHECK_THROWS_AS(train_tc({}, {}, tok, cfg), SamplingError);

  auto unlabeled = samples;
  unlabeled[0].technique.reset();
  CHECK_THROWS_AS(train_tc(unlabeled, {}, tok, cfg), ContractError);

  // keep only one class: the other 13 must be reported, not fatal
  std::vector<ClassifiedSample> narrow;
  for (const auto& s : samples)
    if (*s.technique == Technique::appeal_to_authority) narrow.push_back(s);
  REQUIRE(!narrow.empty());
  std::vector<std::string> warnings;
  TcTrainConfig warned = cfg;
  warned.epochs = 1;
  warned.warnings = &warnings;
  train_tc(narrow, {}, tok, warned);
  REQUIRE(warnings.size() == kTechniqueCount - 1);
  bool mentions_straw_men = false;
  for (const auto& w : warnings)
    mentions_straw_men =
        mentions_straw_men || w.find("Whataboutism, Straw Men") != std::string::npos;
  CHECK(mentions_straw_men);
}

TEST_CASE("technique classifier learns the synthetic triggers") {
  SynthConfig sc;
  sc.articles = 120;
  sc.seed = 3;
  SynthCorpus corpus = make_synth_corpus(sc);
  std::vector<Article> train_articles(corpus.articles.begin(),
                                      corpus.articles.begin() + 96);
  std::vector<Article> dev_articles(corpus.articles.begin() + 96,
                                    corpus.articles.end());
  auto train = synth_samples(corpus, train_articles);
  auto dev = synth_samples(corpus, dev_articles);
  REQUIRE(!train.empty());
  REQUIRE(!dev.empty());

  RuleTokenizer tok(Vocab::build(corpus.articles, 100));
  TcTrainConfig cfg;
  cfg.encoder = small_cfg();
  cfg.encoder.hidden_dim = 48;  // funnel 16, comfortably above 14 classes
  cfg.epochs = 8;
  cfg.lr = 2e-3;
  cfg.seed = 12;

  TcModel model = train_tc(train, dev, tok, cfg);

  std::vector<TcLabel> pred, gold;
  for (const auto& s : dev) {
    auto probs = predict_probs(model, s);
    CHECK(probs.size() == kTechniqueCount);
    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    size_t c = 0;
    for (size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[c]) c = i;
    pred.push_back({s.article_id, technique_from_index(c), s.span});
    gold.push_back({s.article_id, *s.technique, s.span});
  }
  CHECK(tc_micro_f1(pred, gold) >= 0.95);

  // determinism: a re-run reproduces the exact same weights
  TcModel again = train_tc(train, dev, tok, cfg);
  CHECK(save_checkpoint(again.to_checkpoint()) ==
        save_checkpoint(model.to_checkpoint()));

  // oversampling stays deterministic and keeps the task learnable
  TcTrainConfig over = cfg;
  over.oversample = true;
  over.epochs = 4;
  TcModel balanced = train_tc(train, dev, tok, over);
  std::vector<TcLabel> pred_over;
  for (const auto& s : dev) {
    auto probs = predict_probs(balanced, s);
    size_t c = 0;
    for (size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[c]) c = i;
    pred_over.push_back({s.article_id, technique_from_index(c), s.span});
  }
  CHECK(tc_micro_f1(pred_over, gold) >= 0.95);
}

TEST_CASE("ensembles fine-tune one member per checkpoint") {
  SynthConfig sc;
  sc.articles = 60;
  sc.seed = 14;
  SynthCorpus corpus = make_synth_corpus(sc);
  RuleTokenizer tok(Vocab::build(corpus.articles, 100));

  std::vector<Article> train_articles(corpus.articles.begin(),
                                      corpus.articles.begin() + 48);
  std::vector<Article> dev_articles(corpus.articles.begin() + 48,
                                    corpus.articles.end());
  auto train = synth_samples(corpus, train_articles);
  auto dev = synth_samples(corpus, dev_articles);

  EncoderConfig enc_cfg = small_cfg();
  PretrainConfig pre;
  pre.total_steps = 50;
  pre.checkpoint_fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  pre.lr = 1e-3;
  pre.seed = 8;
  auto pretrained = pretrain_mlm(corpus.articles, tok, enc_cfg, pre);
  REQUIRE(pretrained.checkpoints.size() == 5);

  TcTrainConfig cfg;
  cfg.encoder = enc_cfg;
  cfg.epochs = 1;
  cfg.lr = 1e-3;
  cfg.seed = 30;

  Ensemble ensemble = build_ensemble(pretrained.checkpoints, train, dev, tok,
                                     cfg);
  REQUIRE(ensemble.members.size() == 5);

  CHECK_THROWS_AS(build_ensemble({pretrained.checkpoints[0]}, train, dev, tok,
                                 cfg),
                  ContractError);

  // members came from different pre-training stages: some probe sample gets
  // a different distribution from at least one pair of members
  bool any_difference = false;
  for (const auto& s : dev) {
    TcPrediction p = predict_one(ensemble, s);
    REQUIRE(p.member_probs.size() == 5);
    for (const auto& probs : p.member_probs) {
      double sum = 0.0;
      for (double x : probs) sum += x;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(p.aggregate.size() == kTechniqueCount);
    for (size_t i = 0; i + 1 < p.member_probs.size(); ++i)
      any_difference =
          any_difference || p.member_probs[i] != p.member_probs[i + 1];
  }
  CHECK(any_difference);

  // duplicate step fractions only warn
  std::vector<Checkpoint> dupes{pretrained.checkpoints[0],
                                pretrained.checkpoints[0]};
  std::vector<std::string> warnings;
  TcTrainConfig warned = cfg;
  warned.warnings = &warnings;
  Ensemble pair = build_ensemble(dupes, train, dev, tok, warned);
  CHECK(pair.members.size() == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("share step fraction") != std::string::npos);
}

TEST_CASE("an ensemble of identical members collapses to the single model") {
  SynthConfig sc;
  sc.articles = 24;
  sc.seed = 17;
  SynthCorpus corpus = make_synth_corpus(sc);
  RuleTokenizer tok(Vocab::build(corpus.articles, 100));
  auto samples = synth_samples(corpus, corpus.articles);

  TcTrainConfig cfg;
  cfg.encoder = small_cfg();
  cfg.epochs = 1;
  cfg.seed = 2;
  TcModel model = train_tc(samples, {}, tok, cfg);
  Checkpoint ck = model.to_checkpoint();

  Ensemble clones;
  for (int i = 0; i < 3; ++i)
    clones.members.push_back(TcModel::from_checkpoint(ck, tok));

  for (const auto& s : samples) {
    auto probs = predict_probs(model, s);
    size_t single = 0;
    for (size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[single]) single = i;
    TcPrediction p = predict_one(clones, s);
    CHECK(static_cast<size_t>(p.technique) == single);
    for (size_t i = 0; i < probs.size(); ++i)  // mean of identical vectors
      CHECK(p.aggregate[i] == doctest::Approx(probs[i]).epsilon(1e-12));
  }
}

TEST_CASE("ensemble_vote hand-built ballots") {
  // strict majority: A A A B C
  std::vector<std::vector<double>> majority{
      probs_with({{2, 0.5}}), probs_with({{2, 0.6}}), probs_with({{2, 0.7}}),
      probs_with({{5, 0.5}}), probs_with({{9, 0.5}})};
  CHECK(vote_index(majority) == 2);

  // 2-2-1 vote tie: sum of B's probability (2.05) beats A's (1.70)
  std::vector<std::vector<double>> tied{
      probs_with({{2, 0.45}, {5, 0.35}}), probs_with({{2, 0.45}, {5, 0.35}}),
      probs_with({{5, 0.45}, {2, 0.40}}), probs_with({{5, 0.45}, {2, 0.40}}),
      probs_with({{9, 0.50}, {5, 0.45}, {2, 0.0}})};
  CHECK(vote_index(tied) == 5);

  // K = 1 degenerates to that member's argmax
  CHECK(vote_index({probs_with({{11, 0.9}})}) == 11);

  // a tie inside one member votes for the lower class index
  CHECK(vote_index({probs_with({{4, 0.3}, {8, 0.3}})}) == 4);

  // full symmetry: equal votes, equal sums -> lowest class index
  std::vector<std::vector<double>> symmetric{
      probs_with({{6, 0.4}, {3, 0.3}}), probs_with({{3, 0.4}, {6, 0.3}})};
  CHECK(vote_index(symmetric) == 3);

  // aggregate is the member mean
  VoteResult v = ensemble_vote(symmetric);
  CHECK(v.aggregate[3] == doctest::Approx(0.35));
  CHECK(v.aggregate[6] == doctest::Approx(0.35));

  CHECK_THROWS_AS(ensemble_vote({}), ContractError);
  CHECK_THROWS_AS(ensemble_vote({std::vector<double>(13, 1.0 / 13)}),
                  ContractError);
}

TEST_CASE("strict majorities always win regardless of probabilities") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    size_t c = rng.below(kTechniqueCount);
    std::vector<std::vector<double>> members;
    for (int m = 0; m < 5; ++m) {
      std::vector<double> v(kTechniqueCount);
      double sum = 0.0;
      for (auto& x : v) {
        x = rng.uniform(0.01, 1.0);
        sum += x;
      }
      for (auto& x : v) x /= sum;
      if (m < 3) {
        // force this member's argmax to c, with arbitrary confidence
        double top = *std::max_element(v.begin(), v.end());
        v[c] = top + rng.uniform(0.001, 0.5);
        double s2 = 0.0;
        for (double x : v) s2 += x;
        for (auto& x : v) x /= s2;
      }
      members.push_back(std::move(v));
    }
    CHECK(vote_index(members) == c);
  }
}

TEST_CASE("vote outcome survives per-member rescaling") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> plain, rescaled;
    for (int m = 0; m < 3; ++m) {
      std::vector<double> raw(kTechniqueCount);
      for (auto& x : raw) x = rng.uniform(0.01, 1.0);
      double scale = rng.uniform(0.1, 10.0);

      double sum = 0.0;
      for (double x : raw) sum += x;
      std::vector<double> a(kTechniqueCount), b(kTechniqueCount);
      for (size_t i = 0; i < raw.size(); ++i) {
        a[i] = raw[i] / sum;
        b[i] = (raw[i] * scale) / (sum * scale);
      }
      plain.push_back(std::move(a));
      rescaled.push_back(std::move(b));
    }
    CHECK(ensemble_vote(plain).technique ==
          ensemble_vote(rescaled).technique);
  }
}

namespace {

TcPrediction pred_of(int64_t article, Span span, size_t technique,
                     std::vector<double> aggregate) {
  TcPrediction p;
  p.article_id = article;
  p.span = span;
  p.technique = technique_from_index(technique);
  p.aggregate = std::move(aggregate);
  return p;
}

}  // namespace

TEST_CASE("overlap resolution keeps the strongest holder and reassigns the rest") {
  size_t doubt = static_cast<size_t>(Technique::doubt);

  // the documented example: both spans argmax Doubt, 0.9 beats 0.6
  auto first = pred_of(1, {0, 10}, doubt, probs_with({{doubt, 0.9}}));
  auto second =
      pred_of(1, {5, 15}, doubt, probs_with({{doubt, 0.6}, {8, 0.3}}));
  auto resolved = resolve_overlaps({first, second});
  REQUIRE(resolved.size() == 2);
  CHECK(resolved[0].span == Span{0, 10});
  CHECK(resolved[0].technique == Technique::doubt);
  CHECK(resolved[1].span == Span{5, 15});
  CHECK(resolved[1].technique == technique_from_index(8));

  // disjoint spans with equal techniques pass through
  auto far = pred_of(1, {20, 30}, doubt, probs_with({{doubt, 0.6}, {8, 0.3}}));
  auto disjoint = resolve_overlaps({first, far});
  CHECK(disjoint[0].technique == Technique::doubt);
  CHECK(disjoint[1].technique == Technique::doubt);

  // a single prediction passes through
  auto alone = resolve_overlaps({second});
  CHECK(alone[0].technique == Technique::doubt);

  // same spans in different articles never interact
  auto other_article =
      pred_of(2, {5, 15}, doubt, probs_with({{doubt, 0.6}, {8, 0.3}}));
  auto separated = resolve_overlaps({first, other_article});
  CHECK(separated[0].technique == Technique::doubt);
  CHECK(separated[1].technique == Technique::doubt);

  CHECK_THROWS_AS(resolve_overlaps({TcPrediction{}}), ContractError);
}

TEST_CASE("reassignment walks the ranking past classes used by neighbors") {
  // A loses class 3 to B; A's runner-up class 7 is taken by the overlapping
  // D, so A lands on its third-ranked class 2
  auto a = pred_of(1, {0, 10}, 3,
                   probs_with({{3, 0.30}, {7, 0.25}, {2, 0.20}}));
  auto b = pred_of(1, {5, 15}, 3, probs_with({{3, 0.9}}));
  auto d = pred_of(1, {8, 12}, 7, probs_with({{7, 0.8}}));
  auto resolved = resolve_overlaps({a, b, d});
  REQUIRE(resolved.size() == 3);
  CHECK(resolved[0].span == Span{0, 10});
  CHECK(resolved[0].technique == technique_from_index(2));
  CHECK(resolved[1].span == Span{5, 15});
  CHECK(resolved[1].technique == technique_from_index(3));
  CHECK(resolved[2].span == Span{8, 12});
  CHECK(resolved[2].technique == technique_from_index(7));
}

TEST_CASE("a span whose every class is taken keeps its original technique") {
  std::vector<TcPrediction> preds;
  preds.push_back(pred_of(1, {0, 100}, 0, probs_with({{0, 0.9}})));   // winner
  preds.push_back(pred_of(1, {0, 100}, 0, probs_with({{0, 0.5}})));   // loser
  for (size_t c = 1; c < kTechniqueCount; ++c)
    preds.push_back(pred_of(1, {0, 100}, c, probs_with({{c, 0.9}})));

  auto resolved = resolve_overlaps(preds);
  REQUIRE(resolved.size() == preds.size());
  size_t zeros = 0;
  for (const auto& l : resolved)
    if (l.technique == Technique::appeal_to_authority) ++zeros;
  CHECK(zeros == 2);  // documented fallback: both keep class 0
}

TEST_CASE("resolved overlapping spans never share a technique below the fallback threshold") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<TcPrediction> preds;
    for (int i = 0; i < 8; ++i) {
      size_t start = rng.below(30);
      Span span{start, start + 1 + rng.below(10)};
      std::vector<double> agg(kTechniqueCount);
      double sum = 0.0;
      for (auto& x : agg) {
        x = rng.uniform(0.01, 1.0);
        sum += x;
      }
      for (auto& x : agg) x /= sum;
      size_t argmax = 0;
      for (size_t c = 1; c < agg.size(); ++c)
        if (agg[c] > agg[argmax]) argmax = c;
      preds.push_back(pred_of(1, span, argmax, std::move(agg)));
    }

    auto resolved = resolve_overlaps(preds);
    REQUIRE(resolved.size() == preds.size());
    // with only 8 spans the all-excluded fallback cannot trigger, so the
    // postcondition is strict
    for (size_t i = 0; i < resolved.size(); ++i)
      for (size_t j = i + 1; j < resolved.size(); ++j) {
        bool overlap = resolved[i].span.start < resolved[j].span.end &&
                       resolved[j].span.start < resolved[i].span.end;
        if (overlap) CHECK(resolved[i].technique != resolved[j].technique);
      }
  }
}

TEST_CASE("samples_from_spans slices surfaces verbatim") {
  Article article{3, U"water loadword harbor"};
  std::vector<SiLabel> spans{{3, {6, 14}}, {3, {0, 5}}};
  auto samples = samples_from_spans(article, spans);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].surface == U"loadword");
  CHECK(samples[0].span == Span{6, 14});
  CHECK(samples[1].surface == U"water");
  CHECK(!samples[0].technique.has_value());

  CHECK_THROWS_AS(samples_from_spans(article, {{3, {10, 40}}}), ContractError);
  CHECK_THROWS_AS(samples_from_spans(article, {{9, {0, 5}}}), ContractError);
}
