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

#include "cotrans/experiment.hpp"

#include "cotrans/error.hpp"

namespace cotrans {

EvaluationReport evaluate_test(const DatasetBundle& data, const ModelParameters& params,
                               const TrainConfig& config, std::span<const std::uint32_t> ks) {
  require(data.split.has_value(), "evaluate: dataset has no leave-one-out split");
  const LeaveOneOutSplit& split = *data.split;
  ModelGraphs graphs = build_graphs(data.source, split.train_target, data.kg, config);
  ScoringModel scoring = build_scoring(graphs, params, config);
  return evaluate_ranking(scoring, split.test, split.train_target, ks);
}

ExperimentResult run_ablation(Variant variant, TrainConfig config, const DatasetBundle& data,
                              std::span<const std::uint32_t> ks,
                              const std::function<void(const EpochRecord&)>& on_epoch) {
  config.variant = variant;
  ExperimentResult out;
  out.variant = variant;
  out.fit = fit(data, config, on_epoch);
  out.test = evaluate_test(data, out.fit.best, config, ks);
  return out;
}

std::vector<RobustnessPoint> robustness_curve(Variant variant, const TrainConfig& config,
                                              const DatasetBundle& data,
                                              std::span<const double> ratios,
                                              std::uint64_t noise_seed) {
  const std::uint32_t cutoff[] = {10};
  std::vector<RobustnessPoint> points;
  for (double ratio : ratios) {
    DatasetBundle noisy = data;
    std::vector<Edge> added;
    noisy.source = inject_source_noise(data.source, ratio, noise_seed, &added);
    ExperimentResult r = run_ablation(variant, config, noisy, cutoff);
    points.push_back({ratio, added.size(), r.test.at(Metric::Ndcg, 10)});
  }
  return points;
}

double relative_degradation(double clean, double noisy) {
  return clean == 0.0 ? 0.0 : (clean - noisy) / clean;
}

}  // namespace cotrans
