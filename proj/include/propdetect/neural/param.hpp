#pragma once

#include <string>
#include <vector>

#include "propdetect/util/matrix.hpp"

namespace propdetect::neural {

// Non-owning handle to one trainable tensor and its gradient accumulator.
// The owning module keeps the storage alive. The shaped form feeds
// checkpointing; the flat form feeds the optimizer.
struct NamedParam {
  std::string name;
  Matrix* value = nullptr;
  Matrix* grad = nullptr;
};

struct ParamRef {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  size_t size = 0;
};

inline std::vector<ParamRef> to_param_refs(const std::vector<NamedParam>& ps) {
  std::vector<ParamRef> out;
  out.reserve(ps.size());
  for (const auto& p : ps)
    out.push_back({p.name, p.value->data(), p.grad->data(), p.value->size()});
  return out;
}

inline void zero_grads(const std::vector<NamedParam>& params) {
  for (const auto& p : params) p.grad->zero();
}

}  // namespace propdetect::neural
