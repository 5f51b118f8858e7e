#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diffcap/core/common.hpp"
#include "diffcap/core/tensor.hpp"

namespace diffcap {

// Ordered registry of learnable tensors. Registration order is the
// serialization order, so every model lists its parameters in one
// deterministic sweep and the optimizer / checkpoint code never has to
// know the architecture.
template <class T>
struct NamedParams {
  std::vector<std::pair<std::string, Tensor<T>>> items;

  void add(const std::string& name, const Tensor<T>& t) {
    for (const auto& it : items)
      check(it.first != name, ErrorKind::config, "params: duplicate name '" + name + "'");
    t.set_requires_grad(true);
    items.emplace_back(name, t);
  }

  std::size_t size() const { return items.size(); }

  const Tensor<T>& find(const std::string& name) const {
    for (const auto& it : items)
      if (it.first == name) return it.second;
    fail(ErrorKind::config, "params: no parameter named '" + name + "'");
  }

  std::int64_t scalar_count() const {
    std::int64_t n = 0;
    for (const auto& it : items) n += it.second.numel();
    return n;
  }

  void zero_grads() const {
    for (const auto& it : items) it.second.zero_grad();
  }
};

}  // namespace diffcap
