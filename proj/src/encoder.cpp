/*
 * Copyright 2026 The CoTrans Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cotrans/encoder.hpp"

#include <string>

#include "cotrans/error.hpp"

namespace cotrans {

EmbeddingState propagate(const SparseGraph& normalized, Matrix e0, int layers) {
  require(layers >= 0, "propagate: layer count must be non-negative");
  require(e0.rows() == normalized.node_count,
          "propagate: embedding has " + std::to_string(e0.rows()) + " rows but graph has " +
              std::to_string(normalized.node_count) + " nodes");
  EmbeddingState state;
  state.layers.reserve(static_cast<std::size_t>(layers) + 1);
  state.layers.push_back(std::move(e0));
  for (int l = 1; l <= layers; ++l) {
    Matrix next;
    spmm(normalized, state.layers.back(), next);
    state.layers.push_back(std::move(next));
  }
  return state;
}

Matrix backprop_propagate(const Matrix& grad_at_output, const EmbeddingState& state,
                          const SparseGraph& normalized) {
  require(grad_at_output.same_shape(state.output()),
          "backprop_propagate: gradient shape does not match layer output");
  Matrix grad = grad_at_output;
  Matrix scratch;
  for (std::size_t l = 0; l < state.depth(); ++l) {
    spmm(normalized, grad, scratch);
    std::swap(grad, scratch);
  }
  return grad;
}

}  // namespace cotrans
