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

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cotrans/matrix.hpp"

namespace cotrans {

enum class Domain : std::uint8_t { Source, Target };

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Binary implicit feedback of one domain: (user, item) pairs.
struct InteractionGraph {
  Domain domain = Domain::Source;
  std::uint32_t user_count = 0;
  std::uint32_t item_count = 0;
  std::vector<Edge> edges;

  /// Items of each user, sorted ascending.
  std::vector<std::vector<std::uint32_t>> items_by_user() const;
};

/// Entity graph plus the item -> entity links of both domains.
struct KnowledgeLinkage {
  std::uint32_t entity_count = 0;
  std::vector<Edge> entity_edges;
  std::vector<Edge> source_item_entity;
  std::vector<Edge> target_item_entity;

  const std::vector<Edge>& item_entity(Domain d) const {
    return d == Domain::Source ? source_item_entity : target_item_entity;
  }
};

/// Square CSR matrix. Column indices within a row are sorted ascending.
struct SparseGraph {
  std::uint32_t node_count = 0;
  std::vector<std::uint32_t> row_offsets{0};
  std::vector<std::uint32_t> columns;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return columns.size(); }
  std::uint32_t degree(std::uint32_t node) const {
    return row_offsets[node + 1] - row_offsets[node];
  }
  std::span<const std::uint32_t> neighbors(std::uint32_t node) const {
    return {columns.data() + row_offsets[node], degree(node)};
  }
  std::span<const double> weights(std::uint32_t node) const {
    return {values.data() + row_offsets[node], degree(node)};
  }

  /// Value at (a, b), zero when structurally absent.
  double at(std::uint32_t a, std::uint32_t b) const;

  /// Builds a CSR matrix with unit values from a list of directed entries.
  /// Entries must be unique.
  static SparseGraph from_entries(std::uint32_t node_count, std::vector<Edge> entries);
};

/// Row layout of the block adjacency: [users | items | entities].
struct NodeLayout {
  std::uint32_t users = 0;
  std::uint32_t items = 0;
  std::uint32_t entities = 0;

  std::uint32_t total() const noexcept { return users + items + entities; }
  std::uint32_t user(std::uint32_t u) const noexcept { return u; }
  std::uint32_t item(std::uint32_t i) const noexcept { return users + i; }
  std::uint32_t entity(std::uint32_t e) const noexcept { return users + items + e; }
};

struct AssembleOptions {
  /// Include the entity block. When false the layout has no entity rows.
  bool use_knowledge = true;
  /// Entities farther than this many KG hops from any item-linked entity are
  /// isolated. Negative disables scoping.
  int kg_hop_radius = 1;
};

struct AssembledGraph {
  SparseGraph adjacency;  // unit weights, symmetric, zero diagonal
  NodeLayout layout;
  std::size_t duplicate_count = 0;
};

/// Block adjacency of one domain (unnormalized). Throws on out-of-range
/// indices naming the offending edge; duplicate edges are collapsed and
/// counted.
AssembledGraph assemble_adjacency(const InteractionGraph& graph, const KnowledgeLinkage& kg,
                                  const AssembleOptions& options = {});

/// D^{-1/2} A D^{-1/2} with degrees counted as structural nonzeros per row.
SparseGraph normalize_symmetric(const SparseGraph& adjacency);

/// Entities within `radius` hops of the item-linked seed entities.
std::vector<bool> entities_in_scope(const KnowledgeLinkage& kg, int radius);

/// out = A * x
void spmm(const SparseGraph& a, const Matrix& x, Matrix& out);

}  // namespace cotrans
