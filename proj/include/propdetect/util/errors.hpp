#pragma once

#include <stdexcept>
#include <string>

namespace propdetect {

// Input does not match an expected file convention (names, encodings).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Line-oriented text (TSV labels, vocab, config) failed to parse.
// Messages carry 1-based line numbers.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: shape mismatch, violated precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A span or index does not fit the object it points into.
class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Resampling preconditions (no positives, empty input).
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint / model / cache files that cannot be read back.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training numerics went off the rails (non-finite gradient or loss).
// Messages name the offending parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace propdetect
