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

#include "cotrans/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "cotrans/error.hpp"
#include "cotrans/random.hpp"

namespace cotrans {

namespace {
constexpr std::uint64_t kSplitStream = 0x73706c6974;  // "split"
constexpr std::uint64_t kNoiseEdgeStream = 0x6e6f697365;
constexpr std::uint32_t kMinInteractions = 4;
}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::Ndcg:
      return "NDCG";
    case Metric::Hit:
      return "HIT";
    case Metric::Mrr:
      return "MRR";
  }
  return "?";
}

double metric_at(Metric m, std::uint32_t k, std::uint32_t rank) {
  if (rank == 0 || rank > k) return 0.0;
  switch (m) {
    case Metric::Ndcg:
      return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
    case Metric::Hit:
      return 1.0;
    case Metric::Mrr:
      return 1.0 / static_cast<double>(rank);
  }
  return 0.0;
}

double EvaluationReport::at(Metric m, std::uint32_t k) const {
  auto it = aggregate.find({m, k});
  require(it != aggregate.end(), "metric not computed at this cutoff");
  return it->second;
}

LeaveOneOutSplit split_leave_one_out(const InteractionGraph& source,
                                     const InteractionGraph& target, std::uint64_t seed) {
  require(source.user_count == target.user_count, "split: domains must share users");
  auto src_items = source.items_by_user();
  auto tgt_items = target.items_by_user();

  LeaveOneOutSplit split;
  std::vector<Edge> held;
  for (std::uint32_t u = 0; u < target.user_count; ++u) {
    const auto& items = tgt_items[u];
    if (items.size() < kMinInteractions || src_items[u].size() < kMinInteractions) {
      ++split.excluded_users;
      continue;
    }
    CounterStream s(seed, kSplitStream, u);
    const auto n = static_cast<std::uint64_t>(items.size());
    std::uint64_t a = s.below(0, n);
    std::uint64_t b = s.below(1, n - 1);
    if (b >= a) ++b;
    split.validation.emplace_back(u, items[a]);
    split.test.emplace_back(u, items[b]);
    held.emplace_back(u, items[a]);
    held.emplace_back(u, items[b]);
  }
  std::sort(held.begin(), held.end());
  split.train_target = target;
  auto& edges = split.train_target.edges;
  edges.erase(std::remove_if(edges.begin(), edges.end(),
                             [&](const Edge& e) {
                               return std::binary_search(held.begin(), held.end(), e);
                             }),
              edges.end());
  return split;
}

std::uint32_t rank_of(std::span<const double> scores, std::uint32_t held_out,
                      std::span<const std::uint32_t> train_items) {
  const double target = scores[held_out];
  std::uint32_t better = 0;
  auto excluded = train_items.begin();
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    while (excluded != train_items.end() && *excluded < i) ++excluded;
    if (excluded != train_items.end() && *excluded == i) continue;
    if (i == held_out) continue;
    if (scores[i] > target || (scores[i] == target && i < held_out)) ++better;
  }
  return better + 1;
}

EvaluationReport evaluate_ranking(const ScoringModel& model, std::span<const Edge> held_out,
                                  const InteractionGraph& train_target,
                                  std::span<const std::uint32_t> ks) {
  auto train_items = train_target.items_by_user();
  EvaluationReport report;
  std::vector<double> scores(model.items.rows());
  for (const auto& [u, item] : held_out) {
    for (std::uint32_t i = 0; i < scores.size(); ++i) scores[i] = model.score(u, i);
    report.ranks.push_back({u, item, rank_of(scores, item, train_items[u])});
  }
  for (Metric m : {Metric::Ndcg, Metric::Hit, Metric::Mrr}) {
    for (std::uint32_t k : ks) {
      double sum = 0.0;
      for (const auto& r : report.ranks) sum += metric_at(m, k, r.rank);
      double mean = report.ranks.empty() ? 0.0 : sum / static_cast<double>(report.ranks.size());
      report.aggregate[{m, k}] = 100.0 * mean;
    }
  }
  return report;
}

InteractionGraph inject_source_noise(const InteractionGraph& source, double ratio,
                                     std::uint64_t seed, std::vector<Edge>* added) {
  require(ratio >= 0.0 && ratio <= 1.0, "inject_source_noise: ratio must lie in [0, 1]");
  const auto want = static_cast<std::uint64_t>(
      std::ceil(ratio * static_cast<double>(source.edges.size()) - 1e-9));
  std::set<Edge> present(source.edges.begin(), source.edges.end());
  const std::uint64_t capacity =
      static_cast<std::uint64_t>(source.user_count) * source.item_count - present.size();
  require(want <= capacity, "inject_source_noise: not enough unobserved pairs for ratio");

  InteractionGraph out = source;
  CounterStream s(seed, kNoiseEdgeStream);
  std::uint64_t counter = 0;
  std::vector<Edge> fresh;
  while (fresh.size() < want) {
    Edge e{static_cast<std::uint32_t>(s.below(counter, source.user_count)),
           static_cast<std::uint32_t>(s.below(counter + 1, source.item_count))};
    counter += 2;
    if (present.insert(e).second) fresh.push_back(e);
  }
  out.edges.insert(out.edges.end(), fresh.begin(), fresh.end());
  std::sort(out.edges.begin(), out.edges.end());
  if (added != nullptr) *added = std::move(fresh);
  return out;
}

std::string format_metrics_tsv(const EvaluationReport& report, std::string_view variant) {
  std::string out = variant.empty() ? "metric\tk\tvalue\n" : "variant\tmetric\tk\tvalue\n";
  char buf[64];
  for (const auto& [key, value] : report.aggregate) {
    if (!variant.empty()) {
      out += variant;
      out += '\t';
    }
    std::snprintf(buf, sizeof buf, "%.4f", value);
    out += std::string(metric_name(key.first)) + '\t' + std::to_string(key.second) + '\t' + buf +
           '\n';
  }
  return out;
}

std::string format_ranks_tsv(const EvaluationReport& report, const DatasetBundle& bundle) {
  std::string out = "user\titem\trank\n";
  for (const auto& r : report.ranks) {
    out += bundle.users.name(r.user) + '\t' + bundle.target_items.name(r.item) + '\t' +
           std::to_string(r.rank) + '\n';
  }
  return out;
}

}  // namespace cotrans
