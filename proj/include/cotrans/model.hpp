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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotrans/compression.hpp"
#include "cotrans/graph.hpp"
#include "cotrans/matrix.hpp"
#include "cotrans/transfer.hpp"

namespace cotrans {

/// Model variants. The first four share the full architecture and differ
/// only in loss weights.
enum class Variant {
  Full,
  NoPredSource,  // alpha1 = 0
  NoKl,          // alpha2 = 0
  NoCl,          // alpha3 = 0
  NoKg,          // learnable item ids instead of the entity block
  TargetOnly,    // single-domain light convolution on the target graph
};

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

enum class PredictionLoss { Bpr, Bce };

struct TrainConfig {
  std::uint32_t embedding_dim = 32;
  std::uint32_t gate_hidden = 32;
  std::uint32_t batch_size = 4096;
  std::uint32_t max_epochs = 100;
  std::uint32_t patience = 10;  // epochs without validation NDCG@100 gain
  double learning_rate = 1e-3;
  int layers = 2;
  double gumbel_temperature = 0.5;
  double temperature_decay = 1.0;  // per-epoch multiplier; 1 disables annealing
  double min_temperature = 0.05;
  double cl_temperature = 0.2;
  Alphas alphas;
  double init_std = 0.1;
  double weight_decay = 0.0;
  PredictionLoss loss = PredictionLoss::Bpr;
  CompressionFloors floors;
  int kg_hop_radius = 1;
  Variant variant = Variant::Full;
  std::uint64_t seed = 7;

  /// Loss weights after applying the variant.
  Alphas effective_alphas() const;
  /// Gumbel temperature used during `epoch` (1-based).
  double temperature_at(std::uint32_t epoch) const;
  /// Throws on out-of-range values.
  void validate() const;
};

/// Learnable tensors. Tensors a variant does not use are left empty.
enum class Param : std::size_t {
  UserSource,
  UserTarget,
  Entity,
  ItemSource,
  ItemTarget,
  GateW1,
  GateB1,
  GateW2,
  GateB2,
};
inline constexpr std::size_t kParamCount = 9;
std::string_view param_name(Param p);

struct ModelParameters {
  std::array<Matrix, kParamCount> tensors;

  Matrix& operator[](Param p) { return tensors[static_cast<std::size_t>(p)]; }
  const Matrix& operator[](Param p) const { return tensors[static_cast<std::size_t>(p)]; }

  /// Zero tensors with the same shapes.
  ModelParameters zeros_like() const;
  bool all_finite() const;
  std::size_t scalar_count() const;

  GateWeights gate() const {
    return {(*this)[Param::GateW1], (*this)[Param::GateB1], (*this)[Param::GateW2],
            (*this)[Param::GateB2]};
  }

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

/// Normalized propagation operators for both domains.
struct ModelGraphs {
  Variant variant = Variant::Full;
  std::uint32_t users = 0;
  NodeLayout source_layout;
  NodeLayout target_layout;
  SparseGraph source;  // empty for TargetOnly
  SparseGraph target;
  std::size_t duplicate_edges = 0;

  bool uses_source() const { return variant != Variant::TargetOnly; }
  bool uses_entities() const { return variant != Variant::TargetOnly && variant != Variant::NoKg; }
};

ModelGraphs build_graphs(const InteractionGraph& source, const InteractionGraph& train_target,
                         const KnowledgeLinkage& kg, const TrainConfig& config);

ModelParameters init_parameters(const ModelGraphs& graphs, const TrainConfig& config);

/// One training example: a user with sampled positive/negative items in each
/// domain. Source fields are ignored by TargetOnly.
struct TrainingRow {
  std::uint32_t user = 0;
  std::uint32_t target_pos = 0;
  std::uint32_t target_neg = 0;
  std::uint32_t source_pos = 0;
  std::uint32_t source_neg = 0;
};

/// Stochastic inputs of one step: a uniform per row for the gate and a
/// standard normal per row and dimension for the noise.
struct StepDraws {
  std::vector<double> uniform;
  Matrix normal;
};

StepDraws draw_step(std::uint64_t seed, std::uint64_t epoch, std::uint64_t step,
                    std::span<const TrainingRow> rows, std::uint32_t dim);

struct ObjectiveOptions {
  bool with_grad = true;
  double temperature = 0.5;
  /// Replaces the batch statistics of H (gradient checking).
  std::optional<BatchStats> frozen_stats;
  /// Forces every gate to this value, bypassing the gate network.
  std::optional<double> fixed_gate;
};

struct ObjectiveResult {
  LossBundle losses;
  ModelParameters grads;  // empty tensors when with_grad is false
  BatchStats stats;
  std::vector<double> gates;
  double kl_m = 0.0;       // sum of squared closed gates
  bool kl_m_floored = false;
  double min_norm = 0.0;   // smallest norm seen by the contrastive term
};

/// Forward pass over the whole compute graph and, optionally, its exact
/// reverse-mode gradient.
ObjectiveResult evaluate_objective(const ModelGraphs& graphs, const ModelParameters& params,
                                   const TrainConfig& config, std::span<const TrainingRow> rows,
                                   const StepDraws& draws, const ObjectiveOptions& options);

/// Inference-time representations: fused user vectors and target item
/// vectors, such that the score of (u, i) is their dot product.
struct ScoringModel {
  Matrix users;
  Matrix items;

  double score(std::uint32_t user, std::uint32_t item) const {
    return dot(users.row(user), items.row(item));
  }
};

/// `gate_probability`, when given, receives each user's sigmoid(gate logit);
/// it is left untouched for variants without the source channel.
ScoringModel build_scoring(const ModelGraphs& graphs, const ModelParameters& params,
                           const TrainConfig& config,
                           std::vector<double>* gate_probability = nullptr);

}  // namespace cotrans
