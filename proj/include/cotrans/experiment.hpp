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
#include <functional>
#include <span>
#include <vector>

#include "cotrans/dataio.hpp"
#include "cotrans/evaluation.hpp"
#include "cotrans/training.hpp"

namespace cotrans {

struct ExperimentResult {
  Variant variant = Variant::Full;
  FitResult fit;
  EvaluationReport test;
};

inline constexpr std::uint32_t kDefaultCutoffs[] = {10, 100};

/// Trains `variant` (overriding config.variant) on the bundle's split and
/// ranks the test items with the best-validation parameters.
ExperimentResult run_ablation(Variant variant, TrainConfig config, const DatasetBundle& data,
                              std::span<const std::uint32_t> ks = kDefaultCutoffs,
                              const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Test-set ranking for given parameters.
EvaluationReport evaluate_test(const DatasetBundle& data, const ModelParameters& params,
                               const TrainConfig& config, std::span<const std::uint32_t> ks);

struct RobustnessPoint {
  double ratio = 0.0;
  std::size_t added_edges = 0;
  double ndcg10 = 0.0;
};

/// Retrains `variant` on copies of the data whose source domain received
/// ceil(ratio * |E^S|) random edges, for each ratio. Ratio 0 is the clean
/// reference.
std::vector<RobustnessPoint> robustness_curve(Variant variant, const TrainConfig& config,
                                              const DatasetBundle& data,
                                              std::span<const double> ratios,
                                              std::uint64_t noise_seed);

/// (clean - noisy) / clean, or 0 when the clean value is 0.
double relative_degradation(double clean, double noisy);

}  // namespace cotrans
