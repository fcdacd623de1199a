#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "propdetect/neural/encoder.hpp"
#include "propdetect/neural/param.hpp"
#include "propdetect/util/matrix.hpp"

namespace propdetect::neural {

// Self-describing model snapshot: config header, free-form metadata strings
// (embedded vocabulary, model kind, split strategy, ...), and named tensors.
// Serialization is byte-deterministic: maps iterate sorted, doubles are
// written little-endian bit-for-bit.
struct Checkpoint {
  EncoderConfig config;
  uint64_t step = 0;
  double step_fraction = 1.0;
  std::map<std::string, std::string> metadata;
  std::map<std::string, Matrix> tensors;
};

std::string save_checkpoint(const Checkpoint& ck);
Checkpoint load_checkpoint(std::string_view bytes);  // LoadError

void write_checkpoint_file(const Checkpoint& ck, const std::string& path);
Checkpoint read_checkpoint_file(const std::string& path);

// Copies parameter values into ck.tensors under prefix + name.
void store_params(Checkpoint& ck, const std::vector<NamedParam>& params,
                  const std::string& prefix);
// Copies tensors back into the parameters; missing names or shape drift
// raise LoadError.
void load_params(const Checkpoint& ck, const std::vector<NamedParam>& params,
                 const std::string& prefix);

// Builds the encoder described by ck.config and loads its "encoder." tensors.
std::unique_ptr<Encoder> encoder_from_checkpoint(const Checkpoint& ck);

}  // namespace propdetect::neural
