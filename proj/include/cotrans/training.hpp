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
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cotrans/dataio.hpp"
#include "cotrans/model.hpp"

namespace cotrans {

/// Adagrad: acc += g^2; theta -= lr * g / (sqrt(acc) + 1e-10).
class Adagrad {
 public:
  explicit Adagrad(const ModelParameters& shape, double learning_rate);

  void step(ModelParameters& params, const ModelParameters& grads);

  const ModelParameters& accumulators() const { return acc_; }
  double learning_rate() const { return lr_; }

 private:
  ModelParameters acc_;
  double lr_;
};

/// Everything needed to sample training rows for one dataset.
class RowSampler {
 public:
  RowSampler(const InteractionGraph& source, const InteractionGraph& train_target);

  /// Shuffled target interactions of `epoch`, each paired with sampled
  /// negatives and a source positive/negative for the same user.
  std::vector<TrainingRow> epoch_rows(std::uint64_t seed, std::uint64_t epoch) const;

 private:
  std::uint32_t negative(const std::vector<std::uint32_t>& positives, std::uint32_t catalogue,
                         std::uint64_t seed, std::uint64_t key) const;

  std::vector<Edge> target_edges_;
  std::vector<std::vector<std::uint32_t>> source_items_;
  std::vector<std::vector<std::uint32_t>> target_items_;
  std::uint32_t source_catalogue_;
  std::uint32_t target_catalogue_;
};

/// Forward, backward and an Adagrad update. Throws ErrorKind::Numeric and
/// leaves the parameters untouched when the loss is not finite.
LossBundle train_step(const ModelGraphs& graphs, ModelParameters& params, Adagrad& optimizer,
                      const TrainConfig& config, std::span<const TrainingRow> rows,
                      const StepDraws& draws, double temperature);

struct EpochRecord {
  std::uint32_t epoch = 0;
  std::uint32_t steps = 0;
  LossBundle losses;  // mean over the epoch's steps
  double validation_ndcg100 = 0.0;
  double temperature = 0.0;
};

struct FitResult {
  ModelParameters best;
  std::uint32_t best_epoch = 0;
  double best_validation = 0.0;
  std::vector<EpochRecord> log;
};

/// Trains on the bundle's split (which must be present) and returns the
/// checkpoint with the highest validation NDCG@100. Epoch 0 is the
/// initialization. `on_epoch` is called after every record is appended.
FitResult fit(const DatasetBundle& data, const TrainConfig& config,
              const std::function<void(const EpochRecord&)>& on_epoch = {});

std::string format_epoch_record(const EpochRecord& record);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  bool non_smooth = false;  // evaluated at a floor boundary; no comparison made
  std::string worst;        // "<param>[index]"
};

struct GradientCheckOptions {
  double epsilon = 1e-4;
  /// Absolute scale below which differences are compared absolutely.
  double abs_floor = 1e-6;
  double temperature = 0.5;
  std::optional<double> fixed_gate;
  /// Five-point stencil, truncation error O(eps^4). The two-point stencil
  /// (O(eps^2)) misreads coordinates with high curvature, such as sharp gates.
  bool five_point = true;
};

/// Compares every analytic gradient coordinate of the total loss with central
/// differences. Random draws and the batch statistics of H are held fixed.
GradientCheckReport gradient_check(const ModelGraphs& graphs, const ModelParameters& params,
                                   const TrainConfig& config, std::span<const TrainingRow> rows,
                                   const StepDraws& draws, const GradientCheckOptions& options);

/// Versioned binary container of named matrices plus the configuration.
void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params,
                     const TrainConfig& config);

struct Checkpoint {
  ModelParameters params;
  TrainConfig config;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cotrans
