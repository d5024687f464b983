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

// Dense reference implementations and random instance builders shared by the
// unit tests and the acceptance runner.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "cotrans/graph.hpp"
#include "cotrans/matrix.hpp"

namespace cotrans::oracle {

inline Eigen::MatrixXd to_dense(const SparseGraph& g) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g.node_count, g.node_count);
  for (std::uint32_t a = 0; a < g.node_count; ++a) {
    auto nb = g.neighbors(a);
    auto w = g.weights(a);
    for (std::size_t k = 0; k < nb.size(); ++k) d(a, nb[k]) = w[k];
  }
  return d;
}

inline Eigen::MatrixXd to_dense(const Matrix& m) {
  Eigen::MatrixXd d(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) d(r, c) = m(r, c);
  }
  return d;
}

/// D^{-1/2} A D^{-1/2} on a dense 0/1 matrix; zero-degree rows stay zero.
inline Eigen::MatrixXd normalize(const Eigen::MatrixXd& a) {
  Eigen::VectorXd deg = (a.array() != 0.0).cast<double>().rowwise().sum();
  Eigen::VectorXd inv = deg.unaryExpr([](double x) { return x > 0 ? 1.0 / std::sqrt(x) : 0.0; });
  return inv.asDiagonal() * a * inv.asDiagonal();
}

/// Random symmetric unit-weight graph without self loops.
inline SparseGraph random_graph(std::mt19937_64& rng, std::uint32_t nodes, double density) {
  std::bernoulli_distribution keep(density);
  std::vector<Edge> entries;
  for (std::uint32_t a = 0; a < nodes; ++a) {
    for (std::uint32_t b = a + 1; b < nodes; ++b) {
      if (keep(rng)) {
        entries.emplace_back(a, b);
        entries.emplace_back(b, a);
      }
    }
  }
  return SparseGraph::from_entries(nodes, std::move(entries));
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = n(rng);
  return m;
}

/// Brute-force rank of `held_out`: 1 + number of candidates scoring higher,
/// ties broken toward the smaller index; training items are not candidates.
inline std::uint32_t brute_rank(const std::vector<double>& scores, std::uint32_t held_out,
                                const std::set<std::uint32_t>& train) {
  std::vector<std::uint32_t> order;
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    if (i == held_out || !train.count(i)) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
  auto it = std::find(order.begin(), order.end(), held_out);
  return static_cast<std::uint32_t>(it - order.begin()) + 1;
}

}  // namespace cotrans::oracle
