#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "propdetect/neural/param.hpp"
#include "propdetect/segmenter/segmenter.hpp"
#include "propdetect/util/matrix.hpp"
#include "propdetect/util/rng.hpp"

namespace propdetect::neural {

enum class EncoderKind { transformer, bilstm };
enum class EmbeddingSource { internal, external };

const char* encoder_kind_name(EncoderKind k);
EncoderKind encoder_kind_from_name(const std::string& name);  // ParseError

struct EncoderConfig {
  size_t vocab_size = 2000;
  size_t hidden_dim = 64;
  size_t layers = 2;
  size_t heads = 2;
  size_t max_seq_len = 130;  // real tokens + 2 sentinel positions
  EncoderKind encoder_kind = EncoderKind::transformer;
  double dropout = 0.0;
  EmbeddingSource embedding_source = EmbeddingSource::internal;
  std::string embedding_file;  // consulted when embedding_source == external

  void validate() const;  // ContractError on impossible combinations
};

// Per-call scratch space. Forward passes are const on the encoder and write
// all intermediates here, so a loaded model serves concurrent callers as long
// as each brings its own cache.
struct EncoderCache {
  virtual ~EncoderCache() = default;
};

// Maps token ids to per-position features. Row 0 and row T+1 of the output
// are sentinel positions bracketing the sequence; task heads slice or skip
// them as appropriate.
class Encoder {
 public:
  virtual ~Encoder() = default;

  const EncoderConfig& config() const { return cfg_; }

  virtual std::unique_ptr<EncoderCache> make_cache() const = 0;

  // (T+2) x d features. dropout_rng enables dropout (training only); the
  // masks are kept in the cache so backward() sees the same draw.
  virtual Matrix forward(std::span<const int> token_ids, EncoderCache& cache,
                         Rng* dropout_rng = nullptr) const = 0;

  // Accumulates parameter gradients and consumes the cache of the matching
  // forward call.
  virtual void backward(const Matrix& d_features, EncoderCache& cache) = 0;

  virtual std::vector<NamedParam> named_params() = 0;

  virtual void init(Rng& rng) = 0;

  // Replaces the token embedding table (external embedding file support).
  virtual void set_token_embeddings(const Matrix& table) = 0;

  // Convenience inference entry point: private cache, no dropout.
  Matrix encode(std::span<const int> token_ids) const;

 protected:
  explicit Encoder(EncoderConfig cfg);
  EncoderConfig cfg_;
};

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& cfg);

// make_encoder + init, plus the token-table fill when the config names an
// external embedding file. The loaded table replaces the seeded embedding
// initialization but stays trainable.
std::unique_ptr<Encoder> make_initialized_encoder(const EncoderConfig& cfg,
                                                  const Vocab& vocab,
                                                  Rng& init_rng);

// Plain-text embedding table: one `surface v1 v2 ... vd` line per word.
// Vocab surfaces absent from the file get a seeded random vector, so a
// partial table still yields a full matrix. Reserved ids (pad/unk/mask) are
// always random-initialized.
Matrix embeddings_from_file(const std::string& path, const Vocab& vocab,
                            size_t dim, uint64_t seed);

}  // namespace propdetect::neural
