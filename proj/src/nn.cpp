#include "hlearner/nn.hpp"

namespace hl {

std::string to_string(Activation a) {
  return a == Activation::ELU ? "elu" : "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "elu") return Activation::ELU;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

NetShape::NetShape(std::vector<Index> layer_sizes, Activation hidden)
    : sizes_(std::move(layer_sizes)), activation_(hidden) {
  detail::require(sizes_.size() >= 2, "a network needs at least an input and an output layer");
  for (Index n : sizes_) detail::require(n >= 1, "layer widths must be positive");
}

Index param_count(const NetShape& shape) {
  Index total = 0;
  const auto& s = shape.layer_sizes();
  for (std::size_t l = 0; l + 1 < s.size(); ++l) total += s[l] * s[l + 1] + s[l + 1];
  return total;
}

LayerSlice layer_slice(const NetShape& shape, Index layer) {
  const auto& s = shape.layer_sizes();
  Index offset = 0;
  for (Index l = 0; l < layer; ++l) offset += s[l] * s[l + 1] + s[l + 1];
  const Index n_in = s[layer];
  const Index n_out = s[layer + 1];
  return {offset, offset + n_in * n_out, n_in, n_out};
}

}  // namespace hl
