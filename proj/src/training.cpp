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

#include "cotrans/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cotrans/config.hpp"
#include "cotrans/error.hpp"
#include "cotrans/evaluation.hpp"
#include "cotrans/random.hpp"

namespace cotrans {

namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566;  // "shuf"
constexpr std::uint64_t kSampleStream = 0x73616d70;   // "samp"
constexpr char kMagic[8] = {'C', 'T', 'R', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

void check_finite(const LossBundle& l) {
  for (double v : {l.pred_target, l.pred_source, l.kl, l.cl, l.total}) {
    if (!std::isfinite(v)) {
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "non-finite loss: pred_t=%g pred_s=%g kl=%g cl=%g total=%g", l.pred_target,
                    l.pred_source, l.kl, l.cl, l.total);
      fail(ErrorKind::Numeric, buf);
    }
  }
}

void accumulate(LossBundle& sum, const LossBundle& l) {
  sum.pred_target += l.pred_target;
  sum.pred_source += l.pred_source;
  sum.kl += l.kl;
  sum.cl += l.cl;
  sum.total += l.total;
  sum.alphas = l.alphas;
}

// Little-endian fixed-width encoding.
template <typename T>
void put(std::string& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) fail(ErrorKind::Parse, path_ + ": truncated checkpoint");
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

Adagrad::Adagrad(const ModelParameters& shape, double learning_rate)
    : acc_(shape.zeros_like()), lr_(learning_rate) {}

void Adagrad::step(ModelParameters& params, const ModelParameters& grads) {
  for (std::size_t t = 0; t < kParamCount; ++t) {
    auto theta = params.tensors[t].values();
    auto g = grads.tensors[t].values();
    auto acc = acc_.tensors[t].values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      acc[k] += g[k] * g[k];
      theta[k] -= lr_ * g[k] / (std::sqrt(acc[k]) + 1e-10);
    }
  }
}

RowSampler::RowSampler(const InteractionGraph& source, const InteractionGraph& train_target)
    : target_edges_(train_target.edges),
      source_items_(source.items_by_user()),
      target_items_(train_target.items_by_user()),
      source_catalogue_(source.item_count),
      target_catalogue_(train_target.item_count) {
  std::sort(target_edges_.begin(), target_edges_.end());
  target_edges_.erase(std::unique(target_edges_.begin(), target_edges_.end()),
                      target_edges_.end());
}

std::uint32_t RowSampler::negative(const std::vector<std::uint32_t>& positives,
                                   std::uint32_t catalogue, std::uint64_t seed,
                                   std::uint64_t key) const {
  CounterStream s(seed, kSampleStream, key);
  if (positives.size() >= catalogue) return static_cast<std::uint32_t>(s.below(0, catalogue));
  for (std::uint64_t attempt = 0;; ++attempt) {
    auto i = static_cast<std::uint32_t>(s.below(attempt, catalogue));
    if (!std::binary_search(positives.begin(), positives.end(), i)) return i;
  }
}

std::vector<TrainingRow> RowSampler::epoch_rows(std::uint64_t seed, std::uint64_t epoch) const {
  std::vector<Edge> order = target_edges_;
  CounterStream shuffle(seed, kShuffleStream, epoch);
  for (std::size_t k = order.size(); k > 1; --k) {
    std::swap(order[k - 1], order[shuffle.below(k, k)]);
  }
  std::vector<TrainingRow> rows;
  rows.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& [u, i] = order[r];
    TrainingRow row;
    row.user = u;
    row.target_pos = i;
    const std::uint64_t key = (epoch << 40) ^ (static_cast<std::uint64_t>(r) << 2);
    row.target_neg = negative(target_items_[u], target_catalogue_, seed, key);
    const auto& src = source_items_[u];
    if (!src.empty()) {
      CounterStream s(seed, kSampleStream, key | 1);
      row.source_pos = src[s.below(0, src.size())];
      row.source_neg = negative(src, source_catalogue_, seed, key | 2);
    }
    rows.push_back(row);
  }
  return rows;
}

LossBundle train_step(const ModelGraphs& graphs, ModelParameters& params, Adagrad& optimizer,
                      const TrainConfig& config, std::span<const TrainingRow> rows,
                      const StepDraws& draws, double temperature) {
  ObjectiveOptions opt;
  opt.temperature = temperature;
  ObjectiveResult res = evaluate_objective(graphs, params, config, rows, draws, opt);
  check_finite(res.losses);
  if (config.weight_decay > 0.0) {
    for (std::size_t t = 0; t < kParamCount; ++t) {
      axpy(config.weight_decay, params.tensors[t].values(), res.grads.tensors[t].values());
    }
  }
  optimizer.step(params, res.grads);
  return res.losses;
}

FitResult fit(const DatasetBundle& data, const TrainConfig& config,
              const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  require(data.split.has_value(), "fit: dataset has no leave-one-out split");
  const LeaveOneOutSplit& split = *data.split;
  require(!split.train_target.edges.empty(), "fit: empty training set");

  ModelGraphs graphs = build_graphs(data.source, split.train_target, data.kg, config);
  ModelParameters params = init_parameters(graphs, config);
  Adagrad optimizer(params, config.learning_rate);
  RowSampler sampler(data.source, split.train_target);
  const std::uint32_t cutoff[] = {100};

  auto validate = [&](const ModelParameters& p) {
    ScoringModel s = build_scoring(graphs, p, config);
    return evaluate_ranking(s, split.validation, split.train_target, cutoff)
        .at(Metric::Ndcg, 100);
  };

  FitResult result;
  result.best = params;
  result.best_validation = validate(params);
  EpochRecord initial;
  initial.validation_ndcg100 = result.best_validation;
  initial.temperature = config.temperature_at(0);
  result.log.push_back(initial);
  if (on_epoch) on_epoch(initial);

  std::uint32_t since_best = 0;
  for (std::uint32_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double temperature = config.temperature_at(epoch);
    std::vector<TrainingRow> rows = sampler.epoch_rows(config.seed, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.temperature = temperature;
    for (std::size_t begin = 0; begin < rows.size(); begin += config.batch_size) {
      std::size_t end = std::min<std::size_t>(rows.size(), begin + config.batch_size);
      std::span<const TrainingRow> batch(rows.data() + begin, end - begin);
      StepDraws draws = draw_step(config.seed, epoch, rec.steps, batch, config.embedding_dim);
      accumulate(rec.losses,
                 train_step(graphs, params, optimizer, config, batch, draws, temperature));
      ++rec.steps;
    }
    if (rec.steps > 0) {
      const double n = rec.steps;
      rec.losses.pred_target /= n;
      rec.losses.pred_source /= n;
      rec.losses.kl /= n;
      rec.losses.cl /= n;
      rec.losses.total /= n;
    }
    rec.validation_ndcg100 = validate(params);
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.validation_ndcg100 > result.best_validation) {
      result.best_validation = rec.validation_ndcg100;
      result.best_epoch = epoch;
      result.best = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

std::string format_epoch_record(const EpochRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\"epoch\":%u,\"steps\":%u,\"l_pred_t\":%.17g,\"l_pred_s\":%.17g,"
                "\"l_kl\":%.17g,\"l_cl\":%.17g,\"total\":%.17g,\"temperature\":%.17g,"
                "\"val_ndcg100\":%.17g}",
                r.epoch, r.steps, r.losses.pred_target, r.losses.pred_source, r.losses.kl,
                r.losses.cl, r.losses.total, r.temperature, r.validation_ndcg100);
  return buf;
}

GradientCheckReport gradient_check(const ModelGraphs& graphs, const ModelParameters& params,
                                   const TrainConfig& config, std::span<const TrainingRow> rows,
                                   const StepDraws& draws, const GradientCheckOptions& options) {
  ObjectiveOptions base;
  base.temperature = options.temperature;
  base.fixed_gate = options.fixed_gate;
  ObjectiveResult ref = evaluate_objective(graphs, params, config, rows, draws, base);

  GradientCheckReport report;
  const Alphas a = config.effective_alphas();
  const bool floors_matter = graphs.uses_source();
  // Floors make the objective non-differentiable; stay clear of them.
  if (floors_matter && ((a.kl > 0.0 && ref.kl_m < 10.0 * config.floors.m) ||
                        (a.cl > 0.0 && ref.min_norm < 1e3 * config.floors.norm))) {
    report.non_smooth = true;
    return report;
  }

  ObjectiveOptions probe = base;
  probe.with_grad = false;
  if (graphs.uses_source()) probe.frozen_stats = ref.stats;

  ModelParameters work = params;
  for (std::size_t t = 0; t < kParamCount; ++t) {
    auto theta = work.tensors[t].values();
    auto analytic = ref.grads.tensors[t].values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double saved = theta[k];
      auto at = [&](double offset) {
        theta[k] = saved + offset;
        return evaluate_objective(graphs, work, config, rows, draws, probe).losses.total;
      };
      const double h = options.epsilon;
      double numeric = 0.0;
      if (options.five_point) {
        numeric = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12.0 * h);
      } else {
        numeric = (at(h) - at(-h)) / (2.0 * h);
      }
      theta[k] = saved;
      const double scale =
          std::max({std::abs(numeric), std::abs(analytic[k]), options.abs_floor});
      const double rel = std::abs(numeric - analytic[k]) / scale;
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst = std::string(param_name(static_cast<Param>(t))) + "[" +
                       std::to_string(k) + "]";
      }
    }
  }
  return report;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params,
                     const TrainConfig& config) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  RunConfig rc;
  rc.train = config;
  std::string text = config_to_text(rc);
  put<std::uint64_t>(out, text.size());
  out += text;
  std::uint32_t present = 0;
  for (const auto& t : params.tensors) present += t.empty() ? 0 : 1;
  put<std::uint32_t>(out, present);
  for (std::size_t k = 0; k < kParamCount; ++k) {
    const Matrix& m = params.tensors[k];
    if (m.empty()) continue;
    std::string_view name = param_name(static_cast<Param>(k));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, m.rows());
    put<std::uint64_t>(out, m.cols());
    for (double v : m.values()) put<double>(out, v);
  }
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str(), path.string());
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    fail(ErrorKind::Parse, path.string() + ": not a checkpoint file");
  }
  auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::Parse, path.string() + ": unsupported checkpoint version " +
                               std::to_string(version));
  }
  Checkpoint ck;
  RunConfig rc;
  std::string text = r.bytes(r.get<std::uint64_t>());
  for (const auto& [k, v] : parse_config_text(text)) apply_config_entry(rc, k, v);
  ck.config = rc.train;

  auto count = r.get<std::uint32_t>();
  for (std::uint32_t n = 0; n < count; ++n) {
    std::string name = r.bytes(r.get<std::uint32_t>());
    auto rows = r.get<std::uint64_t>();
    auto cols = r.get<std::uint64_t>();
    std::size_t slot = kParamCount;
    for (std::size_t k = 0; k < kParamCount; ++k) {
      if (param_name(static_cast<Param>(k)) == name) slot = k;
    }
    if (slot == kParamCount) fail(ErrorKind::Parse, path.string() + ": unknown tensor " + name);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = r.get<double>();
    ck.params.tensors[slot] = std::move(m);
  }
  if (!r.done()) fail(ErrorKind::Parse, path.string() + ": trailing bytes in checkpoint");
  return ck;
}

}  // namespace cotrans
