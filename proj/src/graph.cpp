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

#include "cotrans/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "cotrans/error.hpp"

namespace cotrans {

namespace {

std::string describe(const char* block, const Edge& e) {
  return std::string(block) + " edge (" + std::to_string(e.first) + ", " +
         std::to_string(e.second) + ")";
}

void check_range(const char* block, const Edge& e, std::uint32_t first_bound,
                 std::uint32_t second_bound) {
  if (e.first >= first_bound || e.second >= second_bound) {
    fail(ErrorKind::InvalidArgument, "index out of range in " + describe(block, e));
  }
}

// Sorts and removes duplicates, returning how many were dropped.
std::size_t dedup(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end());
  auto last = std::unique(edges.begin(), edges.end());
  std::size_t dropped = static_cast<std::size_t>(edges.end() - last);
  edges.erase(last, edges.end());
  return dropped;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> InteractionGraph::items_by_user() const {
  std::vector<std::vector<std::uint32_t>> out(user_count);
  for (const auto& [u, i] : edges) out[u].push_back(i);
  for (auto& items : out) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return out;
}

double SparseGraph::at(std::uint32_t a, std::uint32_t b) const {
  auto cols = neighbors(a);
  auto it = std::lower_bound(cols.begin(), cols.end(), b);
  if (it == cols.end() || *it != b) return 0.0;
  return values[row_offsets[a] + static_cast<std::uint32_t>(it - cols.begin())];
}

SparseGraph SparseGraph::from_entries(std::uint32_t node_count, std::vector<Edge> entries) {
  std::sort(entries.begin(), entries.end());
  SparseGraph g;
  g.node_count = node_count;
  g.row_offsets.assign(node_count + 1, 0);
  g.columns.reserve(entries.size());
  for (const auto& [r, c] : entries) {
    ++g.row_offsets[r + 1];
    g.columns.push_back(c);
  }
  for (std::uint32_t r = 0; r < node_count; ++r) g.row_offsets[r + 1] += g.row_offsets[r];
  g.values.assign(entries.size(), 1.0);
  return g;
}

std::vector<bool> entities_in_scope(const KnowledgeLinkage& kg, int radius) {
  std::vector<bool> keep(kg.entity_count, radius < 0);
  if (radius < 0) return keep;

  std::vector<std::vector<std::uint32_t>> adj(kg.entity_count);
  for (const auto& [a, b] : kg.entity_edges) {
    if (a >= kg.entity_count || b >= kg.entity_count) continue;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> dist(kg.entity_count, -1);
  std::deque<std::uint32_t> queue;
  for (const auto* links : {&kg.source_item_entity, &kg.target_item_entity}) {
    for (const auto& [item, e] : *links) {
      if (e < kg.entity_count && dist[e] < 0) {
        dist[e] = 0;
        queue.push_back(e);
      }
    }
  }
  while (!queue.empty()) {
    std::uint32_t e = queue.front();
    queue.pop_front();
    keep[e] = true;
    if (dist[e] >= radius) continue;
    for (std::uint32_t n : adj[e]) {
      if (dist[n] < 0) {
        dist[n] = dist[e] + 1;
        queue.push_back(n);
      }
    }
  }
  return keep;
}

AssembledGraph assemble_adjacency(const InteractionGraph& graph, const KnowledgeLinkage& kg,
                                  const AssembleOptions& options) {
  AssembledGraph out;
  out.layout.users = graph.user_count;
  out.layout.items = graph.item_count;
  out.layout.entities = options.use_knowledge ? kg.entity_count : 0;
  const NodeLayout& layout = out.layout;

  std::vector<Edge> user_item = graph.edges;
  for (const auto& e : user_item) check_range("user-item", e, graph.user_count, graph.item_count);
  out.duplicate_count += dedup(user_item);

  std::vector<Edge> item_entity;
  std::vector<Edge> entity_pairs;
  if (options.use_knowledge) {
    item_entity = kg.item_entity(graph.domain);
    for (const auto& e : item_entity) {
      check_range("item-entity", e, graph.item_count, kg.entity_count);
    }
    out.duplicate_count += dedup(item_entity);

    std::vector<bool> keep = entities_in_scope(kg, options.kg_hop_radius);
    for (const auto& e : kg.entity_edges) {
      check_range("entity-entity", e, kg.entity_count, kg.entity_count);
      // Self-loops would put weight on the diagonal.
      if (e.first == e.second) continue;
      if (!keep[e.first] || !keep[e.second]) continue;
      entity_pairs.emplace_back(std::min(e.first, e.second), std::max(e.first, e.second));
    }
    out.duplicate_count += dedup(entity_pairs);
  }

  std::vector<Edge> entries;
  entries.reserve(2 * (user_item.size() + item_entity.size() + entity_pairs.size()));
  for (const auto& [u, i] : user_item) {
    entries.emplace_back(layout.user(u), layout.item(i));
    entries.emplace_back(layout.item(i), layout.user(u));
  }
  for (const auto& [i, e] : item_entity) {
    entries.emplace_back(layout.item(i), layout.entity(e));
    entries.emplace_back(layout.entity(e), layout.item(i));
  }
  for (const auto& [a, b] : entity_pairs) {
    entries.emplace_back(layout.entity(a), layout.entity(b));
    entries.emplace_back(layout.entity(b), layout.entity(a));
  }
  out.adjacency = SparseGraph::from_entries(layout.total(), std::move(entries));
  return out;
}

SparseGraph normalize_symmetric(const SparseGraph& adjacency) {
  SparseGraph g = adjacency;
  std::vector<double> inv_sqrt(g.node_count, 0.0);
  for (std::uint32_t n = 0; n < g.node_count; ++n) {
    std::uint32_t d = g.degree(n);
    if (d > 0) inv_sqrt[n] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  for (std::uint32_t r = 0; r < g.node_count; ++r) {
    for (std::uint32_t k = g.row_offsets[r]; k < g.row_offsets[r + 1]; ++k) {
      g.values[k] = inv_sqrt[r] * inv_sqrt[g.columns[k]];
    }
  }
  return g;
}

void spmm(const SparseGraph& a, const Matrix& x, Matrix& out) {
  require(x.rows() == a.node_count, "spmm: operand has " + std::to_string(x.rows()) +
                                        " rows, graph has " + std::to_string(a.node_count) +
                                        " nodes");
  if (!out.same_shape(x)) out = Matrix(x.rows(), x.cols());
  for (std::uint32_t r = 0; r < a.node_count; ++r) {
    auto dst = out.row(r);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::uint32_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) {
      axpy(a.values[k], x.row(a.columns[k]), dst);
    }
  }
}

}  // namespace cotrans
