#include "propdetect/cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "propdetect/corpus/corpus.hpp"
#include "propdetect/eval/eval.hpp"
#include "propdetect/neural/checkpoint.hpp"
#include "propdetect/neural/encoder.hpp"
#include "propdetect/neural/mlm.hpp"
#include "propdetect/pipelines/pipelines.hpp"
#include "propdetect/segmenter/segmenter.hpp"
#include "propdetect/synth/synth.hpp"
#include "propdetect/util/errors.hpp"
#include "propdetect/util/fnv.hpp"
#include "propdetect/util/utf8.hpp"
#include "propdetect/version.hpp"
#include "workspace.hpp"

namespace propdetect::cli {
namespace {

std::string default_workspace() {
  const char* env = std::getenv("PROPDETECT_WORKSPACE");
  return (env && *env) ? std::string(env) : std::string("workspace");
}

fs::path resolved(const std::string& flag, fs::path fallback) {
  return flag.empty() ? std::move(fallback) : fs::path(flag);
}

void add_workspace_option(CLI::App* sub, std::string& ws) {
  sub->add_option("--workspace", ws,
                  "run directory for artifacts, manifests and the lockfile "
                  "(default honors $PROPDETECT_WORKSPACE)")
      ->capture_default_str();
  // The config option lives on the root app; fallthrough lets
  // `propdetect <command> --config file.ini` reach it.
  sub->fallthrough();
}

// ---------------------------------------------------------------- encoders

struct EncoderOpts {
  std::string kind = "transformer";
  uint64_t hidden_dim = 64;
  uint64_t layers = 2;
  uint64_t heads = 2;
  uint64_t max_seq_len = 130;
  double dropout = 0.0;
  std::string embeddings;
};

void add_encoder_options(CLI::App* sub, EncoderOpts& eo) {
  sub->add_option("--encoder", eo.kind, "encoder kind: transformer | bilstm")
      ->capture_default_str();
  sub->add_option("--hidden-dim", eo.hidden_dim, "model width")
      ->capture_default_str();
  sub->add_option("--layers", eo.layers, "encoder depth (transformer)")
      ->capture_default_str();
  sub->add_option("--heads", eo.heads, "attention heads (transformer)")
      ->capture_default_str();
  sub->add_option("--max-seq-len", eo.max_seq_len,
                  "position table size, sentinels included")
      ->capture_default_str();
  sub->add_option("--dropout", eo.dropout, "dropout probability")
      ->capture_default_str();
  sub->add_option("--embeddings", eo.embeddings,
                  "external token embedding table (one `surface v1 .. vd` "
                  "line per word); loaded vectors stay trainable");
}

neural::EncoderConfig encoder_config_from(const EncoderOpts& eo,
                                          size_t vocab_size) {
  neural::EncoderConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.hidden_dim = static_cast<size_t>(eo.hidden_dim);
  cfg.layers = static_cast<size_t>(eo.layers);
  cfg.heads = static_cast<size_t>(eo.heads);
  cfg.max_seq_len = static_cast<size_t>(eo.max_seq_len);
  cfg.dropout = eo.dropout;
  cfg.encoder_kind = neural::encoder_kind_from_name(eo.kind);
  if (!eo.embeddings.empty()) {
    cfg.embedding_source = neural::EmbeddingSource::external;
    cfg.embedding_file = eo.embeddings;
  }
  cfg.validate();
  return cfg;
}

void record_encoder_config(Run& run, const EncoderOpts& eo) {
  run.config("encoder", eo.kind);
  run.config("hidden_dim", eo.hidden_dim);
  run.config("layers", eo.layers);
  run.config("heads", eo.heads);
  run.config("max_seq_len", eo.max_seq_len);
  run.config("dropout", eo.dropout);
  if (!eo.embeddings.empty()) run.config("embeddings", eo.embeddings);
}

// ------------------------------------------------------------ split listing

std::string render_split_listing(const std::vector<Article>& train,
                                 const std::vector<Article>& dev) {
  std::vector<std::pair<int64_t, bool>> rows;
  rows.reserve(train.size() + dev.size());
  for (const Article& a : train) rows.emplace_back(a.id, false);
  for (const Article& a : dev) rows.emplace_back(a.id, true);
  std::sort(rows.begin(), rows.end());
  std::string out;
  for (const auto& [id, is_dev] : rows)
    out += std::to_string(id) + (is_dev ? "\tdev\n" : "\ttrain\n");
  return out;
}

std::map<int64_t, bool> parse_split_listing(std::string_view text) {
  std::map<int64_t, bool> roles;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "split listing line " + std::to_string(line_no);
    const size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(where + ": expected <article_id>\\t<train|dev>");
    int64_t id = 0;
    const auto fc = std::from_chars(line.data(), line.data() + tab, id);
    if (fc.ec != std::errc() || fc.ptr != line.data() + tab)
      throw ParseError(where + ": bad article id");
    const std::string_view role = line.substr(tab + 1);
    bool is_dev = false;
    if (role == "dev")
      is_dev = true;
    else if (role != "train")
      throw ParseError(where + ": unknown role '" + std::string(role) + "'");
    if (!roles.emplace(id, is_dev).second)
      throw ParseError(where + ": duplicate article id");
  }
  return roles;
}

std::map<int64_t, bool> load_split_listing(const fs::path& ws) {
  const fs::path path = ws / "split.tsv";
  require_input(path, "split listing", "run `propdetect prepare` first");
  return parse_split_listing(read_file(path));
}

struct ArticleSplit {
  std::vector<Article> train;
  std::vector<Article> dev;
};

ArticleSplit partition_articles(std::vector<Article> articles,
                                const std::map<int64_t, bool>& roles) {
  ArticleSplit split;
  for (Article& a : articles) {
    const auto it = roles.find(a.id);
    if (it == roles.end())
      throw LoadError("article " + std::to_string(a.id) +
                      " is not in the split listing; re-run "
                      "`propdetect prepare` over this corpus");
    (it->second ? split.dev : split.train).push_back(std::move(a));
  }
  return split;
}

template <typename L>
std::pair<std::vector<L>, std::vector<L>> partition_labels(
    const std::vector<L>& labels, const std::map<int64_t, bool>& roles) {
  std::pair<std::vector<L>, std::vector<L>> out;
  for (const L& l : labels) {
    const auto it = roles.find(l.article_id);
    if (it == roles.end())
      throw LoadError("label references article " +
                      std::to_string(l.article_id) +
                      " outside the split listing; re-run "
                      "`propdetect prepare` over this corpus");
    (it->second ? out.second : out.first).push_back(l);
  }
  return out;
}

// ------------------------------------------------------------- vocabularies

Vocab vocab_from_checkpoint(const neural::Checkpoint& ck) {
  const auto it = ck.metadata.find("vocab");
  if (it == ck.metadata.end())
    throw LoadError("checkpoint has no embedded vocabulary");
  return Vocab::from_file(it->second);
}

// An init checkpoint's embedded vocabulary wins so token ids stay aligned
// with its embedding table; otherwise the prepared vocabulary file.
Vocab vocab_for_training(const neural::Checkpoint* init,
                         const fs::path& vocab_file) {
  if (init) {
    const auto it = init->metadata.find("vocab");
    if (it != init->metadata.end()) return Vocab::from_file(it->second);
  }
  require_input(vocab_file, "vocabulary file",
                "run `propdetect prepare` first");
  return Vocab::from_file(read_file(vocab_file));
}

// --------------------------------------------------------------- samples

std::vector<ClassifiedSample> build_samples(
    const std::vector<Article>& articles, const std::vector<TcLabel>& labels) {
  std::unordered_map<int64_t, std::vector<TcLabel>> by_id;
  for (const TcLabel& l : labels) by_id[l.article_id].push_back(l);
  std::vector<ClassifiedSample> out;
  for (const Article& a : articles) {
    const auto it = by_id.find(a.id);
    if (it == by_id.end()) continue;
    auto part = extract_exact_spans(a, it->second);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<TcLabel> gold_labels_of(
    const std::vector<ClassifiedSample>& samples) {
  std::vector<TcLabel> out;
  out.reserve(samples.size());
  for (const ClassifiedSample& s : samples)
    out.push_back({s.article_id, *s.technique, s.span});
  return out;
}

std::vector<TcLabel> vote_labels(const std::vector<TcPrediction>& preds) {
  std::vector<TcLabel> out;
  out.reserve(preds.size());
  for (const TcPrediction& p : preds)
    out.push_back({p.article_id, p.technique, p.span});
  return out;
}

std::vector<TcLabel> single_model_labels(
    const TcModel& model, const std::vector<ClassifiedSample>& samples) {
  std::vector<TcLabel> out;
  out.reserve(samples.size());
  for (const ClassifiedSample& s : samples) {
    const std::vector<double> probs = predict_probs(model, s);
    const size_t best =
        std::max_element(probs.begin(), probs.end()) - probs.begin();
    out.push_back({s.article_id, technique_from_index(best), s.span});
  }
  return out;
}

// ------------------------------------------------------------- checkpoints

// <prefix><digits>.ckpt entries of a directory, in numeric order.
std::vector<fs::path> numbered_checkpoints(const fs::path& dir,
                                           std::string_view prefix) {
  std::vector<std::pair<uint64_t, fs::path>> hits;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      constexpr std::string_view ext = ".ckpt";
      if (name.size() <= prefix.size() + ext.size()) continue;
      if (name.compare(0, prefix.size(), prefix) != 0) continue;
      if (!name.ends_with(ext)) continue;
      const char* first = name.data() + prefix.size();
      const char* last = name.data() + name.size() - ext.size();
      uint64_t id = 0;
      const auto fc = std::from_chars(first, last, id);
      if (fc.ec != std::errc() || fc.ptr != last) continue;
      hits.emplace_back(id, entry.path());
    }
  }
  std::sort(hits.begin(), hits.end());
  std::vector<fs::path> out;
  out.reserve(hits.size());
  for (auto& [id, path] : hits) out.push_back(std::move(path));
  return out;
}

// -------------------------------------------------------------- span files

// Detected-span files carry 3 columns; a 4-column technique file also works
// as a span source (its technique column is ignored).
std::vector<SiLabel> parse_span_file(std::string_view text) {
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    const auto tabs = std::count(line.begin(), line.end(), '\t');
    if (tabs == 2) return parse_si_labels(text);
    if (tabs == 3) {
      std::vector<SiLabel> out;
      for (const TcLabel& l : parse_tc_labels(text))
        out.push_back({l.article_id, l.span});
      return out;
    }
    throw ParseError("span file: expected 3 or 4 tab-separated columns");
  }
  return {};
}

// ------------------------------------------------------------------ tables

std::string render_class_table(const ClassReport& rep) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "%-32s %9s %9s %9s %9s\n", "technique",
                "precision", "recall", "f1", "support");
  out += line;
  size_t total = 0;
  for (size_t c = 0; c < kTechniqueCount; ++c) {
    total += rep.support[c];
    std::snprintf(line, sizeof line, "%-32s %9s %9s %9s %9zu\n",
                  technique_name(technique_from_index(c)),
                  format_percent(rep.precision[c]).c_str(),
                  format_percent(rep.recall[c]).c_str(),
                  format_percent(rep.f1[c]).c_str(), rep.support[c]);
    out += line;
  }
  std::snprintf(line, sizeof line, "%-32s %9s %9s %9s %9zu\n", "micro", "", "",
                format_percent(rep.micro_f1).c_str(), total);
  out += line;
  return out;
}

std::string hex_digest(std::string_view bytes) { return fnv1a64_hex(bytes); }

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// ------------------------------------------------------------------- synth

struct SynthOpts {
  std::string workspace = default_workspace();
  uint64_t articles = 200;
  uint64_t max_paragraphs = 3;
  uint64_t max_runs = 2;
  uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthOpts& o) {
  try {
    Run run("synth", o.workspace);
    const fs::path out_dir = resolved(o.out, run.workspace() / "corpus");
    SynthConfig cfg;
    cfg.articles = static_cast<size_t>(o.articles);
    cfg.max_paragraphs = static_cast<size_t>(o.max_paragraphs);
    cfg.max_runs_per_paragraph = static_cast<size_t>(o.max_runs);
    cfg.seed = o.seed;
    run.config("articles", o.articles);
    run.config("max_paragraphs", o.max_paragraphs);
    run.config("max_runs", o.max_runs);
    run.config("seed", o.seed);
    run.config("out", out_dir.string());

    SynthCorpus corpus;
    run.stage("generate", [&] { corpus = make_synth_corpus(cfg); });
    run.stage("write", [&] {
      for (const Article& a : corpus.articles)
        run.write_output(
            out_dir / "articles" / ("article" + std::to_string(a.id) + ".txt"),
            utf8_encode(a.text));
      run.write_output(out_dir / "si_gold.tsv",
                       emit_si_predictions(corpus.si_labels));
      run.write_output(out_dir / "tc_gold.tsv",
                       emit_tc_predictions(corpus.tc_labels));
    });
    run.write_sidecar(out_dir / "corpus",
                      {{"seed", std::to_string(o.seed)},
                       {"articles", std::to_string(corpus.articles.size())},
                       {"spans", std::to_string(corpus.si_labels.size())},
                       {"max_paragraphs", std::to_string(o.max_paragraphs)},
                       {"max_runs", std::to_string(o.max_runs)}});
    run.write_manifest();
    std::printf("wrote %zu articles, %zu labelled spans -> %s\n",
                corpus.articles.size(), corpus.si_labels.size(),
                out_dir.string().c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect synth: %s\n", e.what());
    return 1;
  }
}

// ----------------------------------------------------------------- prepare

struct PrepareOpts {
  std::string workspace = default_workspace();
  std::string articles;
  std::string si_labels;
  std::string tc_labels;
  std::string strategy = "ps";
  uint64_t vocab_size = 2000;
  uint64_t max_tokens = 128;
  uint64_t seed = 0;
};

std::string render_segment_cache(const std::vector<Segment>& segments,
                                 const std::unordered_map<
                                     int64_t, std::vector<Span>>& gold_spans,
                                 size_t* positive_count) {
  std::string out;
  for (const Segment& seg : segments) {
    bool positive = false;
    const auto it = gold_spans.find(seg.article_id);
    if (it != gold_spans.end()) {
      const TokenLabelSeq labels = project_labels(seg, it->second);
      positive = std::find(labels.begin(), labels.end(), 1) != labels.end();
    }
    if (positive && positive_count) ++*positive_count;
    out += std::to_string(seg.article_id) + '\t' + std::to_string(seg.start) +
           '\t' + std::to_string(seg.end) + '\t' + (positive ? "1" : "0") +
           '\t';
    for (size_t i = 0; i < seg.tokens.size(); ++i) {
      if (i) out += ' ';
      out += seg.tokens[i].surface;
    }
    out += '\n';
  }
  return out;
}

int cmd_prepare(const PrepareOpts& o) {
  try {
    Run run("prepare", o.workspace);
    const fs::path ws = run.workspace();
    const fs::path articles_dir =
        resolved(o.articles, ws / "corpus" / "articles");
    require_input(articles_dir, "article directory",
                  "pass --articles or run `propdetect synth` first");

    const bool exact_span = o.strategy == "es" || o.strategy == "exact_span";
    std::optional<SplitStrategy> strategy;
    if (!exact_span) strategy = split_strategy_from_name(o.strategy);
    if (exact_span && o.tc_labels.empty())
      throw ContractError(
          "strategy es builds exact-span samples; technique labels are "
          "required (--tc-labels)");
    if (!exact_span && o.si_labels.empty())
      throw ContractError("strategy " + o.strategy +
                          " builds tagged segments; span labels are required "
                          "(--si-labels)");

    run.config("articles", articles_dir.string());
    run.config("strategy", o.strategy);
    run.config("vocab_size", o.vocab_size);
    run.config("max_tokens", o.max_tokens);
    run.config("seed", o.seed);
    if (!o.si_labels.empty()) run.config("si_labels", o.si_labels);
    if (!o.tc_labels.empty()) run.config("tc_labels", o.tc_labels);

    std::vector<Article> articles;
    run.stage("load", [&] { articles = load_article_dir(articles_dir); });

    std::vector<SiLabel> si_labels;
    if (!o.si_labels.empty()) {
      si_labels = parse_si_labels(read_file(o.si_labels));
      validate_against(si_labels, articles);
    }
    std::vector<TcLabel> tc_labels;
    if (!o.tc_labels.empty()) {
      tc_labels = parse_tc_labels(read_file(o.tc_labels));
      validate_against(tc_labels, articles);
    }

    ArticleSplit split;
    run.stage("split", [&] {
      auto [train, dev] = train_dev_split(articles, o.seed);
      split.train = std::move(train);
      split.dev = std::move(dev);
    });
    run.write_output(ws / "split.tsv",
                     render_split_listing(split.train, split.dev));
    run.write_sidecar(
        ws / "split.tsv",
        {{"seed", std::to_string(o.seed)},
         {"train_articles", std::to_string(split.train.size())},
         {"dev_articles", std::to_string(split.dev.size())},
         {"strategy", o.strategy}});

    Vocab vocab;
    run.stage("vocabulary", [&] {
      vocab = Vocab::build(split.train, static_cast<size_t>(o.vocab_size));
    });
    run.write_output(ws / "vocab.txt", vocab.to_file());
    std::printf("split: %zu train / %zu dev articles -> %s\n",
                split.train.size(), split.dev.size(),
                (ws / "split.tsv").string().c_str());
    std::printf("vocabulary: %zu surfaces -> %s\n", vocab.size(),
                (ws / "vocab.txt").string().c_str());

    const RuleTokenizer tok(vocab);
    std::map<int64_t, bool> roles;
    for (const Article& a : split.train) roles.emplace(a.id, false);
    for (const Article& a : split.dev) roles.emplace(a.id, true);

    if (!exact_span) {
      std::unordered_map<int64_t, std::vector<Span>> gold_spans;
      for (const SiLabel& l : si_labels)
        gold_spans[l.article_id].push_back(l.span);
      const auto splitter = (*strategy == SplitStrategy::sentence)
                                ? split_sentences
                                : split_paragraphs;
      size_t train_pos = 0;
      size_t dev_pos = 0;
      std::string train_cache;
      std::string dev_cache;
      run.stage("segment", [&] {
        std::vector<Segment> train_segments;
        for (const Article& a : split.train) {
          auto segs = splitter(a, tok, static_cast<size_t>(o.max_tokens));
          train_segments.insert(train_segments.end(), segs.begin(),
                                segs.end());
        }
        std::vector<Segment> dev_segments;
        for (const Article& a : split.dev) {
          auto segs = splitter(a, tok, static_cast<size_t>(o.max_tokens));
          dev_segments.insert(dev_segments.end(), segs.begin(), segs.end());
        }
        train_cache =
            render_segment_cache(train_segments, gold_spans, &train_pos);
        dev_cache = render_segment_cache(dev_segments, gold_spans, &dev_pos);
        std::printf(
            "segments: %zu train (%zu positive) / %zu dev (%zu positive)\n",
            train_segments.size(), train_pos, dev_segments.size(), dev_pos);
      });
      run.write_output(ws / "cache" / "segments_train.tsv", train_cache);
      run.write_output(ws / "cache" / "segments_dev.tsv", dev_cache);
    }

    if (!tc_labels.empty()) {
      auto [train_l, dev_l] = partition_labels(tc_labels, roles);
      run.write_output(ws / "cache" / "samples_train.tsv",
                       emit_tc_predictions(train_l));
      run.write_output(ws / "cache" / "samples_dev.tsv",
                       emit_tc_predictions(dev_l));
      std::printf("samples: %zu train / %zu dev\n", train_l.size(),
                  dev_l.size());
    }

    run.write_manifest();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect prepare: %s\n", e.what());
    return 1;
  }
}

// ---------------------------------------------------------------- pretrain

struct PretrainOpts {
  std::string workspace = default_workspace();
  std::string articles;
  std::string vocab;
  uint64_t total_steps = 2000;
  std::vector<double> fractions = {0.175, 0.40, 0.60, 0.75, 1.0};
  double lr = 1e-4;
  uint64_t seed = 0;
  EncoderOpts enc;
};

int cmd_pretrain(const PretrainOpts& o) {
  try {
    Run run("pretrain", o.workspace);
    const fs::path ws = run.workspace();
    const fs::path articles_dir =
        resolved(o.articles, ws / "corpus" / "articles");
    const fs::path vocab_path = resolved(o.vocab, ws / "vocab.txt");
    require_input(articles_dir, "article directory",
                  "pass --articles or run `propdetect synth` first");
    require_input(vocab_path, "vocabulary file",
                  "run `propdetect prepare` first");

    run.config("articles", articles_dir.string());
    run.config("vocab", vocab_path.string());
    run.config("total_steps", o.total_steps);
    run.config("fractions", o.fractions);
    run.config("lr", o.lr);
    run.config("seed", o.seed);
    record_encoder_config(run, o.enc);

    std::vector<Article> corpus;
    run.stage("load", [&] { corpus = load_text_dir(articles_dir); });
    const RuleTokenizer tok(Vocab::from_file(read_file(vocab_path)));
    const neural::EncoderConfig cfg =
        encoder_config_from(o.enc, tok.vocab().size());
    neural::PretrainConfig pc;
    pc.total_steps = o.total_steps;
    pc.checkpoint_fractions = o.fractions;
    pc.lr = o.lr;
    pc.seed = o.seed;

    std::printf("pre-training: %zu articles, %llu steps (warm-up %llu)\n",
                corpus.size(),
                static_cast<unsigned long long>(o.total_steps),
                static_cast<unsigned long long>(
                    neural::warmup_steps_for(o.total_steps)));
    neural::PretrainResult result;
    run.stage("pretrain", [&] {
      result = neural::pretrain_mlm(corpus, tok, cfg, pc);
    });
    for (const neural::Checkpoint& ck : result.checkpoints) {
      char name[32];
      std::snprintf(name, sizeof name, "pretrain_%08llu.ckpt",
                    static_cast<unsigned long long>(ck.step));
      const fs::path path = ws / "checkpoints" / name;
      run.write_output(path, neural::save_checkpoint(ck));
      std::printf("checkpoint step %llu -> %s\n",
                  static_cast<unsigned long long>(ck.step),
                  path.string().c_str());
    }
    char first[32], final[32];
    std::snprintf(first, sizeof first, "%.6f", result.first_loss);
    std::snprintf(final, sizeof final, "%.6f", result.final_loss);
    run.write_sidecar(
        ws / "checkpoints" / "pretrain",
        {{"seed", std::to_string(o.seed)},
         {"total_steps", std::to_string(o.total_steps)},
         {"lr", std::to_string(o.lr)},
         {"checkpoints", std::to_string(result.checkpoints.size())},
         {"first_loss", first},
         {"final_loss", final}});
    run.write_manifest();
    std::printf("step-1 loss %s, final loss %s\n", first, final);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect pretrain: %s\n", e.what());
    return 1;
  }
}

// ---------------------------------------------------------------- train-si

struct TrainSiOpts {
  std::string workspace = default_workspace();
  std::string articles;
  std::string si_labels;
  std::string strategy = "ps";
  uint64_t epochs = 5;
  double lr = 1e-3;
  uint64_t seed = 0;
  bool freeze_encoder = false;
  std::string init_from;
  std::string out;
  EncoderOpts enc;
};

int cmd_train_si(const TrainSiOpts& o) {
  try {
    Run run("train-si", o.workspace);
    const fs::path ws = run.workspace();
    const fs::path articles_dir =
        resolved(o.articles, ws / "corpus" / "articles");
    const fs::path si_path =
        resolved(o.si_labels, ws / "corpus" / "si_gold.tsv");
    const fs::path out_path = resolved(o.out, ws / "models" / "si_model.ckpt");
    require_input(articles_dir, "article directory",
                  "pass --articles or run `propdetect synth` first");
    require_input(si_path, "span labels", "pass --si-labels");

    run.config("articles", articles_dir.string());
    run.config("si_labels", si_path.string());
    run.config("strategy", o.strategy);
    run.config("epochs", o.epochs);
    run.config("lr", o.lr);
    run.config("seed", o.seed);
    run.config("freeze_encoder", o.freeze_encoder);
    run.config("init_from", o.init_from.empty() ? "none" : o.init_from);
    run.config("out", out_path.string());
    record_encoder_config(run, o.enc);

    std::vector<Article> articles;
    run.stage("load", [&] { articles = load_article_dir(articles_dir); });
    const std::vector<SiLabel> labels = parse_si_labels(read_file(si_path));
    validate_against(labels, articles);
    const auto roles = load_split_listing(ws);
    ArticleSplit split = partition_articles(std::move(articles), roles);
    const auto [train_l, dev_l] = partition_labels(labels, roles);

    std::optional<neural::Checkpoint> init;
    if (!o.init_from.empty()) {
      require_input(o.init_from, "initial checkpoint",
                    "run `propdetect pretrain` first");
      init = neural::read_checkpoint_file(o.init_from);
    }
    const RuleTokenizer tok(
        vocab_for_training(init ? &*init : nullptr, ws / "vocab.txt"));

    SiTrainConfig cfg;
    cfg.encoder = encoder_config_from(o.enc, tok.vocab().size());
    cfg.split_strategy = split_strategy_from_name(o.strategy);
    cfg.epochs = static_cast<size_t>(o.epochs);
    cfg.lr = o.lr;
    cfg.seed = o.seed;
    cfg.freeze_encoder = o.freeze_encoder;
    cfg.init_from = init ? &*init : nullptr;

    std::printf("training span tagger: %zu train / %zu dev articles, "
                "strategy %s, %llu epochs\n",
                split.train.size(), split.dev.size(),
                split_strategy_name(cfg.split_strategy),
                static_cast<unsigned long long>(o.epochs));
    std::optional<SiModel> model;
    run.stage("train", [&] {
      model.emplace(train_si(split.train, train_l, split.dev, dev_l, tok,
                             cfg));
    });

    SiScore dev_score;
    run.stage("evaluate", [&] {
      dev_score = si_score(predict_si(*model, split.dev), dev_l);
    });
    std::printf("dev span F1 = %s (precision %s, recall %s)\n",
                format_percent(dev_score.f1).c_str(),
                format_percent(dev_score.precision).c_str(),
                format_percent(dev_score.recall).c_str());

    const std::string bytes = neural::save_checkpoint(model->to_checkpoint());
    run.write_output(out_path, bytes);
    run.write_sidecar(
        out_path,
        {{"seed", std::to_string(o.seed)},
         {"epochs", std::to_string(o.epochs)},
         {"lr", std::to_string(o.lr)},
         {"strategy", split_strategy_name(cfg.split_strategy)},
         {"freeze_encoder", o.freeze_encoder ? "true" : "false"},
         {"init_from", o.init_from.empty() ? "none" : o.init_from},
         {"dev_f1", format_percent(dev_score.f1)},
         {"digest", hex_digest(bytes)}});
    run.write_manifest();
    std::printf("model -> %s\n", out_path.string().c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect train-si: %s\n", e.what());
    return 1;
  }
}

// ---------------------------------------------------------------- train-tc

struct TrainTcOpts {
  std::string workspace = default_workspace();
  std::string articles;
  std::string tc_labels;
  bool oversampling = false;
  uint64_t epochs = 5;
  double lr = 1e-4;
  uint64_t seed = 0;
  bool freeze_encoder = false;
  std::string init_from;
  bool ensemble = false;
  std::string checkpoints;
  std::string out;
  EncoderOpts enc;
};

int cmd_train_tc(const TrainTcOpts& o) {
  try {
    Run run("train-tc", o.workspace);
    const fs::path ws = run.workspace();
    const fs::path articles_dir =
        resolved(o.articles, ws / "corpus" / "articles");
    const fs::path tc_path =
        resolved(o.tc_labels, ws / "corpus" / "tc_gold.tsv");
    require_input(articles_dir, "article directory",
                  "pass --articles or run `propdetect synth` first");
    require_input(tc_path, "technique labels", "pass --tc-labels");

    run.config("articles", articles_dir.string());
    run.config("tc_labels", tc_path.string());
    run.config("oversampling", o.oversampling);
    run.config("epochs", o.epochs);
    run.config("lr", o.lr);
    run.config("seed", o.seed);
    run.config("freeze_encoder", o.freeze_encoder);
    run.config("ensemble", o.ensemble);
    run.config("init_from", o.init_from.empty() ? "none" : o.init_from);
    record_encoder_config(run, o.enc);

    std::vector<Article> articles;
    run.stage("load", [&] { articles = load_article_dir(articles_dir); });
    const std::vector<TcLabel> labels = parse_tc_labels(read_file(tc_path));
    validate_against(labels, articles);
    const auto roles = load_split_listing(ws);
    ArticleSplit split = partition_articles(std::move(articles), roles);
    const auto [train_l, dev_l] = partition_labels(labels, roles);
    const std::vector<ClassifiedSample> train_s =
        build_samples(split.train, train_l);
    const std::vector<ClassifiedSample> dev_s =
        build_samples(split.dev, dev_l);
    std::printf("technique samples: %zu train / %zu dev\n", train_s.size(),
                dev_s.size());

    std::vector<std::string> warnings;
    TcTrainConfig cfg;
    cfg.oversample = o.oversampling;
    cfg.epochs = static_cast<size_t>(o.epochs);
    cfg.lr = o.lr;
    cfg.seed = o.seed;
    cfg.freeze_encoder = o.freeze_encoder;
    cfg.warnings = &warnings;

    if (o.ensemble) {
      const fs::path ck_dir = resolved(o.checkpoints, ws / "checkpoints");
      const std::vector<fs::path> ck_files =
          numbered_checkpoints(ck_dir, "pretrain_");
      if (ck_files.empty())
        throw LoadError("no pre-training checkpoints in '" + ck_dir.string() +
                        "'; run `propdetect pretrain` first");
      std::vector<neural::Checkpoint> cks;
      cks.reserve(ck_files.size());
      for (const fs::path& f : ck_files)
        cks.push_back(neural::read_checkpoint_file(f.string()));
      run.config("checkpoints", ck_dir.string());
      run.config("members", ck_files.size());

      const RuleTokenizer tok(vocab_from_checkpoint(cks.front()));
      cfg.encoder = encoder_config_from(o.enc, tok.vocab().size());
      std::printf("fine-tuning %zu ensemble members from %s\n", cks.size(),
                  ck_dir.string().c_str());
      std::optional<Ensemble> ens;
      run.stage("train", [&] {
        ens.emplace(build_ensemble(cks, train_s, dev_s, tok, cfg));
      });
      print_warnings(warnings);

      double micro = 1.0;
      run.stage("evaluate", [&] {
        if (!dev_s.empty())
          micro = tc_micro_f1(vote_labels(predict_tc(*ens, dev_s)),
                              gold_labels_of(dev_s));
      });
      std::printf("dev micro F1 (ensemble vote) = %s\n",
                  format_percent(micro).c_str());

      std::vector<std::pair<std::string, std::string>> meta = {
          {"seed", std::to_string(o.seed)},
          {"epochs", std::to_string(o.epochs)},
          {"lr", std::to_string(o.lr)},
          {"oversampling", o.oversampling ? "true" : "false"},
          {"members", std::to_string(ens->members.size())},
          {"dev_micro_f1", format_percent(micro)}};
      for (size_t i = 0; i < ens->members.size(); ++i) {
        const fs::path path =
            ws / "models" / ("tc_member_" + std::to_string(i) + ".ckpt");
        const std::string bytes =
            neural::save_checkpoint(ens->members[i].to_checkpoint());
        run.write_output(path, bytes);
        meta.emplace_back("member_" + std::to_string(i) + "_digest",
                          hex_digest(bytes));
        std::printf("member -> %s\n", path.string().c_str());
      }
      run.write_sidecar(ws / "models" / "ensemble", meta);
    } else {
      const fs::path out_path =
          resolved(o.out, ws / "models" / "tc_model.ckpt");
      run.config("out", out_path.string());
      std::optional<neural::Checkpoint> init;
      if (!o.init_from.empty()) {
        require_input(o.init_from, "initial checkpoint",
                      "run `propdetect pretrain` first");
        init = neural::read_checkpoint_file(o.init_from);
      }
      const RuleTokenizer tok(
          vocab_for_training(init ? &*init : nullptr, ws / "vocab.txt"));
      cfg.encoder = encoder_config_from(o.enc, tok.vocab().size());
      cfg.init_from = init ? &*init : nullptr;

      std::printf("training technique classifier: %llu epochs%s\n",
                  static_cast<unsigned long long>(o.epochs),
                  o.oversampling ? ", oversampled" : "");
      std::optional<TcModel> model;
      run.stage("train", [&] {
        model.emplace(train_tc(train_s, dev_s, tok, cfg));
      });
      print_warnings(warnings);

      double micro = 1.0;
      run.stage("evaluate", [&] {
        if (!dev_s.empty())
          micro = tc_micro_f1(single_model_labels(*model, dev_s),
                              gold_labels_of(dev_s));
      });
      std::printf("dev micro F1 = %s\n", format_percent(micro).c_str());

      const std::string bytes =
          neural::save_checkpoint(model->to_checkpoint());
      run.write_output(out_path, bytes);
      run.write_sidecar(
          out_path,
          {{"seed", std::to_string(o.seed)},
           {"epochs", std::to_string(o.epochs)},
           {"lr", std::to_string(o.lr)},
           {"oversampling", o.oversampling ? "true" : "false"},
           {"freeze_encoder", o.freeze_encoder ? "true" : "false"},
           {"init_from", o.init_from.empty() ? "none" : o.init_from},
           {"dev_micro_f1", format_percent(micro)},
           {"digest", hex_digest(bytes)}});
      std::printf("model -> %s\n", out_path.string().c_str());
    }

    run.write_manifest();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect train-tc: %s\n", e.what());
    return 1;
  }
}

// ----------------------------------------------------------------- predict

struct PredictOpts {
  std::string workspace = default_workspace();
  std::string subtask;
  std::string articles;
  std::string model;
  std::string spans;
  bool ensemble = false;
  std::string models_dir;
  std::string out;
};

int cmd_predict_si(Run& run, const PredictOpts& o) {
  const fs::path ws = run.workspace();
  const fs::path articles_dir = resolved(o.articles, ws / "corpus" / "articles");
  const fs::path model_path = resolved(o.model, ws / "models" / "si_model.ckpt");
  const fs::path out_path = resolved(o.out, ws / "predictions" / "si_pred.tsv");
  require_input(articles_dir, "article directory", "pass --articles");
  require_input(model_path, "span model", "run `propdetect train-si` first");

  run.config("articles", articles_dir.string());
  run.config("model", model_path.string());
  run.config("out", out_path.string());

  const std::string model_bytes = read_file(model_path);
  const neural::Checkpoint ck = neural::load_checkpoint(model_bytes);
  const RuleTokenizer tok(vocab_from_checkpoint(ck));
  std::optional<SiModel> model;
  run.stage("load", [&] { model.emplace(SiModel::from_checkpoint(ck, tok)); });

  std::vector<Article> articles;
  run.stage("read", [&] { articles = load_article_dir(articles_dir); });
  std::vector<SiLabel> preds;
  run.stage("predict", [&] { preds = predict_si(*model, articles); });

  run.write_output(out_path, emit_si_predictions(preds));
  run.write_sidecar(out_path,
                    {{"model", model_path.string()},
                     {"model_digest", hex_digest(model_bytes)},
                     {"articles", articles_dir.string()},
                     {"spans", std::to_string(preds.size())}});
  run.write_manifest();
  std::printf("predicted %zu spans over %zu articles -> %s\n", preds.size(),
              articles.size(), out_path.string().c_str());
  return 0;
}

int cmd_predict_tc(Run& run, const PredictOpts& o) {
  const fs::path ws = run.workspace();
  const fs::path articles_dir = resolved(o.articles, ws / "corpus" / "articles");
  const fs::path spans_path = resolved(o.spans, ws / "predictions" / "si_pred.tsv");
  const fs::path out_path = resolved(o.out, ws / "predictions" / "tc_pred.tsv");
  require_input(articles_dir, "article directory", "pass --articles");
  require_input(spans_path, "span file",
                "run `propdetect predict --subtask si` first, or pass --spans");

  run.config("articles", articles_dir.string());
  run.config("spans", spans_path.string());
  run.config("ensemble", o.ensemble);
  run.config("out", out_path.string());

  // Load the classifier members: one model, or every numbered member file.
  std::vector<std::string> member_bytes;
  std::vector<fs::path> member_paths;
  if (o.ensemble) {
    const fs::path dir = resolved(o.models_dir, ws / "models");
    member_paths = numbered_checkpoints(dir, "tc_member_");
    if (member_paths.empty())
      throw LoadError("no ensemble members in '" + dir.string() +
                      "'; run `propdetect train-tc --ensemble` first");
  } else {
    member_paths.push_back(resolved(o.model, ws / "models" / "tc_model.ckpt"));
    require_input(member_paths.front(), "technique model",
                  "run `propdetect train-tc` first");
  }
  for (const fs::path& p : member_paths) member_bytes.push_back(read_file(p));

  std::vector<neural::Checkpoint> cks;
  cks.reserve(member_bytes.size());
  for (const std::string& b : member_bytes)
    cks.push_back(neural::load_checkpoint(b));
  const RuleTokenizer tok(vocab_from_checkpoint(cks.front()));
  Ensemble ens;
  run.stage("load", [&] {
    for (const neural::Checkpoint& ck : cks)
      ens.members.push_back(TcModel::from_checkpoint(ck, tok));
  });

  std::vector<Article> articles;
  run.stage("read", [&] { articles = load_article_dir(articles_dir); });
  std::unordered_map<int64_t, const Article*> article_of;
  for (const Article& a : articles) article_of[a.id] = &a;

  const std::vector<SiLabel> spans = parse_span_file(read_file(spans_path));
  std::map<int64_t, std::vector<SiLabel>> spans_by_article;
  for (const SiLabel& s : spans) spans_by_article[s.article_id].push_back(s);

  std::vector<ClassifiedSample> samples;
  samples.reserve(spans.size());
  for (const auto& [id, article_spans] : spans_by_article) {
    const auto it = article_of.find(id);
    if (it == article_of.end())
      throw LoadError("span file references article " + std::to_string(id) +
                      " but '" + articles_dir.string() +
                      "' has no file for it");
    auto part = samples_from_spans(*it->second, article_spans);
    samples.insert(samples.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }

  std::vector<TcLabel> labels;
  run.stage("predict", [&] {
    labels = resolve_overlaps(predict_tc(ens, samples));
  });

  run.write_output(out_path, emit_tc_predictions(labels));
  std::vector<std::pair<std::string, std::string>> meta = {
      {"spans", spans_path.string()},
      {"articles", articles_dir.string()},
      {"members", std::to_string(member_paths.size())},
      {"labels", std::to_string(labels.size())}};
  for (size_t i = 0; i < member_paths.size(); ++i)
    meta.emplace_back("member_" + std::to_string(i),
                      member_paths[i].filename().string() + " " +
                          hex_digest(member_bytes[i]));
  run.write_sidecar(out_path, meta);
  run.write_manifest();
  std::printf("predicted techniques for %zu spans -> %s\n", labels.size(),
              out_path.string().c_str());
  return 0;
}

int cmd_predict(const PredictOpts& o) {
  try {
    Run run("predict", o.workspace);
    return o.subtask == "si" ? cmd_predict_si(run, o)
                             : cmd_predict_tc(run, o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect predict: %s\n", e.what());
    return 1;
  }
}

// ------------------------------------------------------------------- score

struct ScoreOpts {
  std::string workspace = default_workspace();
  std::string subtask;
  std::string pred;
  std::string gold;
  std::string out;
};

int cmd_score(const ScoreOpts& o) {
  try {
    Run run("score", o.workspace);
    const fs::path ws = run.workspace();
    const bool si = o.subtask == "si";
    const fs::path pred_path = resolved(
        o.pred, ws / "predictions" / (si ? "si_pred.tsv" : "tc_pred.tsv"));
    const fs::path gold_path = resolved(
        o.gold, ws / "corpus" / (si ? "si_gold.tsv" : "tc_gold.tsv"));
    const fs::path out_path = resolved(
        o.out, ws / "reports" / (si ? "score_si.txt" : "score_tc.txt"));
    require_input(pred_path, "prediction file",
                  std::string("run `propdetect predict --subtask ") +
                      o.subtask + "` first");
    require_input(gold_path, "gold label file", "pass --gold");

    run.config("subtask", o.subtask);
    run.config("pred", pred_path.string());
    run.config("gold", gold_path.string());
    run.config("out", out_path.string());

    std::string text;
    if (si) {
      const std::vector<SiLabel> pred = parse_si_labels(read_file(pred_path));
      const std::vector<SiLabel> gold = parse_si_labels(read_file(gold_path));
      SiScore s;
      run.stage("score", [&] { s = si_score(pred, gold); });
      text = "subtask=si\npred_spans=" + std::to_string(pred.size()) +
             "\ngold_spans=" + std::to_string(gold.size()) +
             "\nprecision=" + format_percent(s.precision) +
             "\nrecall=" + format_percent(s.recall) +
             "\nf1=" + format_percent(s.f1) + "\n\nspan identification: P " +
             format_percent(s.precision) + "  R " +
             format_percent(s.recall) + "  F1 " + format_percent(s.f1) + "\n";
    } else {
      const std::vector<TcLabel> pred = parse_tc_labels(read_file(pred_path));
      const std::vector<TcLabel> gold = parse_tc_labels(read_file(gold_path));
      ClassReport rep;
      run.stage("score", [&] { rep = per_class_report(pred, gold); });
      text = "subtask=tc\npred_labels=" + std::to_string(pred.size()) +
             "\ngold_labels=" + std::to_string(gold.size()) +
             "\nmicro_f1=" + format_percent(rep.micro_f1) + "\n\n" +
             render_class_table(rep);
    }
    std::fputs(text.c_str(), stdout);
    run.write_output(out_path, text);
    run.write_manifest();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect score: %s\n", e.what());
    return 1;
  }
}

// ------------------------------------------------------------------ report

struct ReportOpts {
  std::string workspace = default_workspace();
  std::string pred;
  std::string gold;
  std::string out;
};

int cmd_report(const ReportOpts& o) {
  try {
    Run run("report", o.workspace);
    const fs::path ws = run.workspace();
    const fs::path pred_path =
        resolved(o.pred, ws / "predictions" / "tc_pred.tsv");
    const fs::path gold_path =
        resolved(o.gold, ws / "corpus" / "tc_gold.tsv");
    const fs::path out_path = resolved(o.out, ws / "reports" / "report.txt");
    require_input(pred_path, "prediction file",
                  "run `propdetect predict --subtask tc` first");
    require_input(gold_path, "gold label file", "pass --gold");

    run.config("pred", pred_path.string());
    run.config("gold", gold_path.string());
    run.config("out", out_path.string());

    const std::vector<TcLabel> pred = parse_tc_labels(read_file(pred_path));
    const std::vector<TcLabel> gold = parse_tc_labels(read_file(gold_path));
    ClassReport rep;
    run.stage("score", [&] { rep = per_class_report_relaxed(pred, gold); });
    const std::string text = render_class_table(rep);
    std::fputs(text.c_str(), stdout);
    run.write_output(out_path, text);
    run.write_manifest();
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "propdetect report: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{
      "span-level propaganda detection: span identification (si) and "
      "technique classification (tc)",
      "propdetect"};
  app.set_version_flag("--version", std::string("propdetect ") + kVersion);
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI file with option defaults under a [command] section; "
                 "command-line flags win");

  SynthOpts so;
  CLI::App* synth = app.add_subcommand(
      "synth", "generate the separable benchmark corpus");
  add_workspace_option(synth, so.workspace);
  synth->add_option("--articles", so.articles, "article count")
      ->capture_default_str();
  synth->add_option("--max-paragraphs", so.max_paragraphs,
                    "paragraphs per article, upper bound")
      ->capture_default_str();
  synth->add_option("--max-runs", so.max_runs,
                    "trigger runs per paragraph, upper bound")
      ->capture_default_str();
  synth->add_option("--seed", so.seed, "generator seed")
      ->capture_default_str();
  synth->add_option("--out", so.out, "corpus directory (<workspace>/corpus)");

  PrepareOpts po;
  CLI::App* prepare = app.add_subcommand(
      "prepare", "split the corpus, build the vocabulary, cache segments");
  add_workspace_option(prepare, po.workspace);
  prepare->add_option("--articles", po.articles,
                      "article directory (<workspace>/corpus/articles)");
  prepare->add_option("--si-labels", po.si_labels, "gold span TSV");
  prepare->add_option("--tc-labels", po.tc_labels, "gold technique TSV");
  prepare->add_option("--strategy", po.strategy,
                      "ps (paragraph) | ss (sentence) | es (exact span)")
      ->capture_default_str();
  prepare->add_option("--vocab-size", po.vocab_size,
                      "vocabulary size, reserved ids included")
      ->capture_default_str();
  prepare->add_option("--max-tokens", po.max_tokens,
                      "segment length cap in tokens")
      ->capture_default_str();
  prepare->add_option("--seed", po.seed, "train/dev shuffle seed")
      ->capture_default_str();

  PretrainOpts pr;
  CLI::App* pretrain = app.add_subcommand(
      "pretrain", "masked-LM pre-training with fractional checkpoints");
  add_workspace_option(pretrain, pr.workspace);
  pretrain->add_option("--articles", pr.articles,
                       "text directory (<workspace>/corpus/articles)");
  pretrain->add_option("--vocab", pr.vocab,
                       "vocabulary file (<workspace>/vocab.txt)");
  pretrain->add_option("--total-steps", pr.total_steps, "optimizer steps")
      ->capture_default_str();
  pretrain->add_option("--fractions", pr.fractions,
                       "checkpoint fractions of total steps")
      ->delimiter(',');
  pretrain->add_option("--lr", pr.lr, "peak learning rate")
      ->capture_default_str();
  pretrain->add_option("--seed", pr.seed, "run seed")->capture_default_str();
  add_encoder_options(pretrain, pr.enc);

  TrainSiOpts ts;
  CLI::App* train_si_cmd = app.add_subcommand(
      "train-si", "train the span tagger (encoder + CRF)");
  add_workspace_option(train_si_cmd, ts.workspace);
  train_si_cmd->add_option("--articles", ts.articles,
                           "article directory (<workspace>/corpus/articles)");
  train_si_cmd->add_option("--si-labels", ts.si_labels,
                           "gold span TSV (<workspace>/corpus/si_gold.tsv)");
  train_si_cmd->add_option("--strategy", ts.strategy,
                           "ps (paragraph) | ss (sentence)")
      ->capture_default_str();
  train_si_cmd->add_option("--epochs", ts.epochs, "training epochs")
      ->capture_default_str();
  train_si_cmd->add_option("--lr", ts.lr, "learning rate")
      ->capture_default_str();
  train_si_cmd->add_option("--seed", ts.seed, "run seed")
      ->capture_default_str();
  train_si_cmd->add_flag("--freeze-encoder", ts.freeze_encoder,
                         "train heads only");
  train_si_cmd->add_option("--init-from", ts.init_from,
                           "pre-trained encoder checkpoint");
  train_si_cmd->add_option("--out", ts.out,
                           "model path (<workspace>/models/si_model.ckpt)");
  add_encoder_options(train_si_cmd, ts.enc);

  TrainTcOpts tt;
  CLI::App* train_tc_cmd = app.add_subcommand(
      "train-tc", "train the technique classifier or a checkpoint ensemble");
  add_workspace_option(train_tc_cmd, tt.workspace);
  train_tc_cmd->add_option("--articles", tt.articles,
                           "article directory (<workspace>/corpus/articles)");
  train_tc_cmd->add_option("--tc-labels", tt.tc_labels,
                           "gold technique TSV "
                           "(<workspace>/corpus/tc_gold.tsv)");
  train_tc_cmd->add_flag("--oversampling", tt.oversampling,
                         "oversample classes to the majority count");
  train_tc_cmd->add_option("--epochs", tt.epochs, "training epochs")
      ->capture_default_str();
  train_tc_cmd->add_option("--lr", tt.lr, "learning rate")
      ->capture_default_str();
  train_tc_cmd->add_option("--seed", tt.seed, "run seed")
      ->capture_default_str();
  train_tc_cmd->add_flag("--freeze-encoder", tt.freeze_encoder,
                         "train the head only");
  CLI::Option* tt_init = train_tc_cmd->add_option(
      "--init-from", tt.init_from, "pre-trained encoder checkpoint");
  CLI::Option* tt_ens = train_tc_cmd->add_flag(
      "--ensemble", tt.ensemble,
      "fine-tune one member per pre-training checkpoint");
  tt_init->excludes(tt_ens);
  train_tc_cmd->add_option("--checkpoints", tt.checkpoints,
                           "pre-training checkpoint directory "
                           "(<workspace>/checkpoints)");
  train_tc_cmd->add_option("--out", tt.out,
                           "model path (<workspace>/models/tc_model.ckpt)");
  add_encoder_options(train_tc_cmd, tt.enc);

  PredictOpts pd;
  CLI::App* predict = app.add_subcommand("predict", "run a trained model");
  add_workspace_option(predict, pd.workspace);
  predict->add_option("--subtask", pd.subtask, "si | tc")
      ->required()
      ->check(CLI::IsMember({"si", "tc"}));
  predict->add_option("--articles", pd.articles,
                      "article directory (<workspace>/corpus/articles)");
  predict->add_option("--model", pd.model, "model checkpoint");
  predict->add_option("--spans", pd.spans,
                      "tc only: span file to classify "
                      "(<workspace>/predictions/si_pred.tsv)");
  predict->add_flag("--ensemble", pd.ensemble,
                    "tc only: vote over every tc_member_*.ckpt");
  predict->add_option("--models", pd.models_dir,
                      "tc only: member directory (<workspace>/models)");
  predict->add_option("--out", pd.out, "prediction TSV path");

  ScoreOpts sc;
  CLI::App* score = app.add_subcommand(
      "score", "score predictions against gold labels");
  add_workspace_option(score, sc.workspace);
  score->add_option("--subtask", sc.subtask, "si | tc")
      ->required()
      ->check(CLI::IsMember({"si", "tc"}));
  score->add_option("--pred", sc.pred, "prediction TSV");
  score->add_option("--gold", sc.gold, "gold TSV");
  score->add_option("--out", sc.out, "report path (<workspace>/reports)");

  ReportOpts rp;
  CLI::App* report = app.add_subcommand(
      "report", "per-technique table for end-to-end predictions");
  add_workspace_option(report, rp.workspace);
  report->add_option("--pred", rp.pred,
                     "prediction TSV (<workspace>/predictions/tc_pred.tsv)");
  report->add_option("--gold", rp.gold,
                     "gold TSV (<workspace>/corpus/tc_gold.tsv)");
  report->add_option("--out", rp.out,
                     "report path (<workspace>/reports/report.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (synth->parsed()) return cmd_synth(so);
  if (prepare->parsed()) return cmd_prepare(po);
  if (pretrain->parsed()) return cmd_pretrain(pr);
  if (train_si_cmd->parsed()) return cmd_train_si(ts);
  if (train_tc_cmd->parsed()) return cmd_train_tc(tt);
  if (predict->parsed()) return cmd_predict(pd);
  if (score->parsed()) return cmd_score(sc);
  if (report->parsed()) return cmd_report(rp);
  return 1;
}

}  // namespace propdetect::cli
