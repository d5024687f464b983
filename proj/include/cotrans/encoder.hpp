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

#pragma once

#include <vector>

#include "cotrans/graph.hpp"
#include "cotrans/matrix.hpp"

namespace cotrans {

/// Light graph convolution: every layer is one multiplication by the
/// normalized adjacency, no weights and no nonlinearity.
struct EmbeddingState {
  /// layers[0] is the input, layers[l] = A * layers[l-1].
  std::vector<Matrix> layers;

  const Matrix& input() const { return layers.front(); }
  /// Output of the last layer; user and item rows form the representation.
  const Matrix& output() const { return layers.back(); }
  std::size_t depth() const { return layers.size() - 1; }
};

EmbeddingState propagate(const SparseGraph& normalized, Matrix e0, int layers);

/// Gradient with respect to the input rows given the gradient at the last
/// layer. The operator is symmetric, so this is A^L * grad.
Matrix backprop_propagate(const Matrix& grad_at_output, const EmbeddingState& state,
                          const SparseGraph& normalized);

}  // namespace cotrans
