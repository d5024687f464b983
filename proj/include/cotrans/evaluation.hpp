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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotrans/dataio.hpp"
#include "cotrans/graph.hpp"
#include "cotrans/model.hpp"

namespace cotrans {

enum class Metric { Ndcg, Hit, Mrr };

std::string_view metric_name(Metric m);

/// Metric of a single relevant item at 1-based `rank`, cut off at `k`.
double metric_at(Metric m, std::uint32_t k, std::uint32_t rank);

struct RankingResult {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::uint32_t rank = 0;  // 1-based among candidates
};

using MetricKey = std::pair<Metric, std::uint32_t>;

struct EvaluationReport {
  std::vector<RankingResult> ranks;
  /// Mean over users, multiplied by 100.
  std::map<MetricKey, double> aggregate;

  double at(Metric m, std::uint32_t k) const;
};

/// Holds out one validation and one test target item per user that has more
/// than three interactions in each domain. Other users stay in training only.
LeaveOneOutSplit split_leave_one_out(const InteractionGraph& source,
                                     const InteractionGraph& target, std::uint64_t seed);

/// 1-based rank of `held_out` among all candidate items not in `train_items`
/// (sorted ascending). Ties go to the smaller item index.
std::uint32_t rank_of(std::span<const double> scores, std::uint32_t held_out,
                      std::span<const std::uint32_t> train_items);

/// Full-catalogue ranking of every held-out pair.
EvaluationReport evaluate_ranking(const ScoringModel& model, std::span<const Edge> held_out,
                                  const InteractionGraph& train_target,
                                  std::span<const std::uint32_t> ks);

/// Adds ceil(ratio * |edges|) uniformly random unobserved (user, item) pairs.
/// Original edges are kept. Returns the new graph; `added` receives the pairs.
InteractionGraph inject_source_noise(const InteractionGraph& source, double ratio,
                                     std::uint64_t seed, std::vector<Edge>* added = nullptr);

std::string format_metrics_tsv(const EvaluationReport& report, std::string_view variant = {});
std::string format_ranks_tsv(const EvaluationReport& report, const DatasetBundle& bundle);

}  // namespace cotrans
