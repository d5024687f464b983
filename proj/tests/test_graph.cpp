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

#include <cmath>
#include <random>

#include "cotrans/error.hpp"
#include "cotrans/graph.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cotrans;

namespace {

InteractionGraph interactions(std::uint32_t users, std::uint32_t items, std::vector<Edge> e) {
  InteractionGraph g;
  g.user_count = users;
  g.item_count = items;
  g.edges = std::move(e);
  return g;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("single user, item and entity mirror into four entries") {
    auto g = interactions(1, 1, {{0, 0}});
    KnowledgeLinkage kg;
    kg.entity_count = 1;
    kg.source_item_entity = {{0, 0}};
    AssembledGraph a = assemble_adjacency(g, kg);
    CHECK(a.adjacency.node_count == 3);
    CHECK(a.adjacency.nnz() == 4);
    CHECK(a.adjacency.at(0, 1) == 1.0);
    CHECK(a.adjacency.at(1, 0) == 1.0);
    CHECK(a.adjacency.at(1, 2) == 1.0);
    CHECK(a.adjacency.at(2, 1) == 1.0);
    CHECK(a.adjacency.at(0, 2) == 0.0);
  }

  TEST_CASE("empty inputs give an empty matrix") {
    AssembledGraph a = assemble_adjacency(interactions(0, 0, {}), KnowledgeLinkage{});
    CHECK(a.adjacency.nnz() == 0);
  }

  TEST_CASE("block counts match a dense block oracle") {
    auto g = interactions(2, 3, {{0, 0}, {0, 1}, {1, 1}, {1, 2}});
    KnowledgeLinkage kg;
    kg.entity_count = 2;
    kg.source_item_entity = {{0, 0}, {2, 1}};
    kg.entity_edges = {{0, 1}};
    AssembledGraph a = assemble_adjacency(g, kg);
    CHECK(a.adjacency.nnz() == 14);

    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(7, 7);
    const NodeLayout& l = a.layout;
    auto set = [&](std::uint32_t x, std::uint32_t y) { dense(x, y) = dense(y, x) = 1.0; };
    for (auto [u, i] : g.edges) set(l.user(u), l.item(i));
    for (auto [i, e] : kg.source_item_entity) set(l.item(i), l.entity(e));
    for (auto [e, f] : kg.entity_edges) set(l.entity(e), l.entity(f));
    CHECK((oracle::to_dense(a.adjacency) - dense).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("target domain uses its own item-entity links") {
    auto g = interactions(1, 2, {{0, 1}});
    g.domain = Domain::Target;
    KnowledgeLinkage kg;
    kg.entity_count = 1;
    kg.source_item_entity = {{0, 0}};
    kg.target_item_entity = {{1, 0}};
    AssembledGraph a = assemble_adjacency(g, kg);
    CHECK(a.adjacency.at(a.layout.item(1), a.layout.entity(0)) == 1.0);
    CHECK(a.adjacency.at(a.layout.item(0), a.layout.entity(0)) == 0.0);
  }

  TEST_CASE("duplicates collapse and are counted; self loops are dropped") {
    auto g = interactions(1, 1, {{0, 0}, {0, 0}});
    KnowledgeLinkage kg;
    kg.entity_count = 2;
    kg.source_item_entity = {{0, 0}};
    kg.entity_edges = {{0, 1}, {1, 0}, {1, 1}};
    AssembledGraph a = assemble_adjacency(g, kg);
    CHECK(a.duplicate_count >= 2);
    CHECK(a.adjacency.nnz() == 4 + 2);
    for (std::uint32_t n = 0; n < a.adjacency.node_count; ++n) CHECK(a.adjacency.at(n, n) == 0.0);
  }

  TEST_CASE("out-of-range indices are rejected with the edge") {
    auto g = interactions(1, 1, {{0, 3}});
    try {
      assemble_adjacency(g, KnowledgeLinkage{});
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidArgument);
      CHECK(std::string(e.what()).find("(0, 3)") != std::string::npos);
    }
    KnowledgeLinkage kg;
    kg.entity_count = 1;
    kg.entity_edges = {{0, 5}};
    CHECK_THROWS_AS(assemble_adjacency(interactions(1, 1, {}), kg), Error);
  }

  TEST_CASE("entities beyond the hop radius are isolated") {
    // item0 - e0 - e1 - e2: radius 1 keeps e0 and e1 only.
    auto g = interactions(1, 1, {{0, 0}});
    KnowledgeLinkage kg;
    kg.entity_count = 3;
    kg.source_item_entity = {{0, 0}};
    kg.entity_edges = {{0, 1}, {1, 2}};
    auto scope = entities_in_scope(kg, 1);
    CHECK(scope == std::vector<bool>{true, true, false});
    AssembledGraph a = assemble_adjacency(g, kg, {true, 1});
    CHECK(a.adjacency.degree(a.layout.entity(2)) == 0);
    AssembledGraph wide = assemble_adjacency(g, kg, {true, 2});
    CHECK(wide.adjacency.degree(wide.layout.entity(2)) == 1);
  }

  TEST_CASE("normalization of a single edge and a star") {
    SparseGraph edge = SparseGraph::from_entries(2, {{0, 1}, {1, 0}});
    SparseGraph n = normalize_symmetric(edge);
    CHECK(n.at(0, 1) == 1.0);
    CHECK(n.at(1, 0) == 1.0);

    SparseGraph star = SparseGraph::from_entries(
        5, {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {0, 3}, {3, 0}, {0, 4}, {4, 0}});
    SparseGraph s = normalize_symmetric(star);
    for (std::uint32_t leaf = 1; leaf < 5; ++leaf) {
      CHECK(s.at(0, leaf) == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(s.at(leaf, 0) == doctest::Approx(0.5).epsilon(1e-15));
    }
  }

  TEST_CASE("normalization matches the dense oracle and its identities") {
    std::mt19937_64 rng(20);
    for (int trial = 0; trial < 40; ++trial) {
      std::uint32_t nodes = 2 + static_cast<std::uint32_t>(rng() % 49);
      SparseGraph a = oracle::random_graph(rng, nodes, 0.15);
      SparseGraph n = normalize_symmetric(a);
      CHECK(n.columns == a.columns);
      CHECK(n.row_offsets == a.row_offsets);
      Eigen::MatrixXd ref = oracle::normalize(oracle::to_dense(a));
      CHECK((oracle::to_dense(n) - ref).cwiseAbs().maxCoeff() <= 1e-12);
      for (std::uint32_t x = 0; x < nodes; ++x) {
        double sum = 0.0;
        auto nb = n.neighbors(x);
        auto w = n.weights(x);
        for (std::size_t k = 0; k < nb.size(); ++k) {
          CHECK(n.at(nb[k], x) == w[k]);
          sum += w[k] * std::sqrt(static_cast<double>(n.degree(nb[k])));
        }
        if (n.degree(x) > 0) {
          CHECK(sum == doctest::Approx(std::sqrt(static_cast<double>(n.degree(x)))).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("spmm matches the dense product") {
    std::mt19937_64 rng(3);
    SparseGraph a = normalize_symmetric(oracle::random_graph(rng, 20, 0.2));
    Matrix x = oracle::random_matrix(rng, 20, 4);
    Matrix out(20, 4);
    spmm(a, x, out);
    Eigen::MatrixXd ref = oracle::to_dense(a) * oracle::to_dense(x);
    CHECK((oracle::to_dense(out) - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
}
