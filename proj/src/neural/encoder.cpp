#include "propdetect/neural/encoder.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "propdetect/neural/bilstm.hpp"
#include "propdetect/neural/transformer.hpp"
#include "propdetect/util/errors.hpp"
#include "src/neural/internal.hpp"

namespace propdetect::neural {

const char* encoder_kind_name(EncoderKind k) {
  return k == EncoderKind::transformer ? "transformer" : "bilstm";
}

EncoderKind encoder_kind_from_name(const std::string& name) {
  if (name == "transformer") return EncoderKind::transformer;
  if (name == "bilstm") return EncoderKind::bilstm;
  throw ParseError("unknown encoder kind '" + name +
                   "' (expected transformer or bilstm)");
}

void EncoderConfig::validate() const {
  if (vocab_size < 4)
    throw ContractError("vocab_size " + std::to_string(vocab_size) +
                        " leaves no room for real tokens after the 3 "
                        "reserved ids");
  if (hidden_dim == 0 || layers == 0 || heads == 0)
    throw ContractError("hidden_dim, layers, and heads must be positive");
  if (encoder_kind == EncoderKind::transformer && hidden_dim % heads != 0)
    throw ContractError("hidden_dim " + std::to_string(hidden_dim) +
                        " is not divisible by heads " + std::to_string(heads));
  if (max_seq_len < 3)
    throw ContractError("max_seq_len " + std::to_string(max_seq_len) +
                        " cannot fit one token plus 2 sentinel positions");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw ContractError("dropout rate must lie in [0, 1)");
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Matrix Encoder::encode(std::span<const int> token_ids) const {
  auto cache = make_cache();
  return forward(token_ids, *cache, nullptr);
}

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& cfg) {
  if (cfg.encoder_kind == EncoderKind::transformer)
    return std::make_unique<TransformerEncoder>(cfg);
  return std::make_unique<BilstmEncoder>(cfg);
}

std::unique_ptr<Encoder> make_initialized_encoder(const EncoderConfig& cfg,
                                                  const Vocab& vocab,
                                                  Rng& init_rng) {
  auto enc = make_encoder(cfg);
  enc->init(init_rng);
  if (cfg.embedding_source == EmbeddingSource::external) {
    if (cfg.embedding_file.empty())
      throw ContractError("external embedding source without a file path");
    enc->set_token_embeddings(embeddings_from_file(
        cfg.embedding_file, vocab, cfg.hidden_dim, init_rng.next()));
  }
  return enc;
}

Matrix embeddings_from_file(const std::string& path, const Vocab& vocab,
                            size_t dim, uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open embedding file: " + path);

  Matrix table(vocab.size(), dim);
  std::vector<bool> seen(vocab.size(), false);

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string surface;
    fields >> surface;
    int id = vocab.id_of(surface);
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (!fields.eof())
      throw ParseError("line " + std::to_string(line_no) +
                       ": malformed embedding value");
    if (values.size() != dim)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " values, got " +
                       std::to_string(values.size()));
    // ids below the reserved boundary mean the surface is out-of-vocabulary
    // (id_of falls back to unk); skip those rows
    if (id < static_cast<int>(Vocab::kReserved)) continue;
    for (size_t i = 0; i < dim; ++i) table(static_cast<size_t>(id), i) = values[i];
    seen[static_cast<size_t>(id)] = true;
  }

  // reserved ids and vocabulary words missing from the file get seeded
  // random vectors so the table is always complete
  for (size_t id = 0; id < vocab.size(); ++id) {
    if (seen[id]) continue;
    Rng rng(Rng::mix(seed, id));
    for (size_t i = 0; i < dim; ++i) table(id, i) = rng.normal(0.0, 0.02);
  }
  return table;
}

}  // namespace propdetect::neural
