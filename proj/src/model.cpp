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

#include "cotrans/model.hpp"

#include <algorithm>
#include <cmath>

#include "cotrans/encoder.hpp"
#include "cotrans/error.hpp"
#include "cotrans/random.hpp"

namespace cotrans {

namespace {

constexpr std::uint64_t kGateStream = 0x67617465;   // "gate"
constexpr std::uint64_t kNoiseStream = 0x6e6f6973;  // "nois"
constexpr std::uint64_t kInitStream = 0x696e6974;   // "init"

struct VariantName {
  Variant variant;
  std::string_view name;
};

constexpr VariantName kVariantNames[] = {
    {Variant::Full, "full"},         {Variant::NoPredSource, "no-pred-s"},
    {Variant::NoKl, "no-kl"},        {Variant::NoCl, "no-cl"},
    {Variant::NoKg, "no-kg"},        {Variant::TargetOnly, "target-only"},
};

void fill_normal(Matrix& m, std::uint64_t seed, Param p, double stddev) {
  CounterStream s(seed, kInitStream, static_cast<std::uint64_t>(p));
  auto v = m.values();
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = stddev * s.normal(k);
}

// Initial node features: user table, item rows (zero or learnable ids) and
// the shared entity table.
Matrix layer_input(const NodeLayout& layout, const Matrix& users, const Matrix* items,
                   const Matrix* entities, std::size_t dim) {
  Matrix e0(layout.total(), dim);
  for (std::uint32_t u = 0; u < layout.users; ++u) {
    std::copy_n(users.row(u).begin(), dim, e0.row(layout.user(u)).begin());
  }
  if (items != nullptr) {
    for (std::uint32_t i = 0; i < layout.items; ++i) {
      std::copy_n(items->row(i).begin(), dim, e0.row(layout.item(i)).begin());
    }
  }
  if (entities != nullptr) {
    for (std::uint32_t e = 0; e < layout.entities; ++e) {
      std::copy_n(entities->row(e).begin(), dim, e0.row(layout.entity(e)).begin());
    }
  }
  return e0;
}

void add_rows(Matrix& dst, const Matrix& src, std::uint32_t offset, std::uint32_t count) {
  for (std::uint32_t r = 0; r < count; ++r) axpy(1.0, src.row(offset + r), dst.row(r));
}

struct Encoded {
  EmbeddingState source;
  EmbeddingState target;
};

Encoded encode(const ModelGraphs& g, const ModelParameters& p, const TrainConfig& cfg) {
  const std::size_t d = cfg.embedding_dim;
  Encoded enc;
  const bool kg = g.uses_entities();
  const Matrix* entity = kg ? &p[Param::Entity] : nullptr;
  if (g.uses_source()) {
    const Matrix* items = g.variant == Variant::NoKg ? &p[Param::ItemSource] : nullptr;
    enc.source = propagate(
        g.source, layer_input(g.source_layout, p[Param::UserSource], items, entity, d),
        cfg.layers);
  }
  const Matrix* items = kg ? nullptr : &p[Param::ItemTarget];
  enc.target = propagate(
      g.target, layer_input(g.target_layout, p[Param::UserTarget], items, entity, d), cfg.layers);
  return enc;
}

Matrix gather_users(const Matrix& x, std::span<const TrainingRow> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(x.row(rows[r].user).begin(), x.row(rows[r].user).end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

std::string_view variant_name(Variant v) {
  for (const auto& e : kVariantNames) {
    if (e.variant == v) return e.name;
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto& e : kVariantNames) {
    if (e.name == name) return e.variant;
  }
  return std::nullopt;
}

Alphas TrainConfig::effective_alphas() const {
  Alphas a = alphas;
  switch (variant) {
    case Variant::NoPredSource:
      a.pred_source = 0.0;
      break;
    case Variant::NoKl:
      a.kl = 0.0;
      break;
    case Variant::NoCl:
      a.cl = 0.0;
      break;
    case Variant::TargetOnly:
      a = Alphas{0.0, 0.0, 0.0};
      break;
    default:
      break;
  }
  return a;
}

double TrainConfig::temperature_at(std::uint32_t epoch) const {
  double t = gumbel_temperature * std::pow(temperature_decay, epoch > 0 ? epoch - 1 : 0);
  return temperature_decay < 1.0 ? std::max(t, min_temperature) : t;
}

void TrainConfig::validate() const {
  require(embedding_dim > 0, "embedding_dim must be positive");
  require(gate_hidden > 0, "gate_hidden must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(layers >= 0, "layers must be non-negative");
  require(gumbel_temperature > 0.0, "gumbel temperature must be positive");
  require(temperature_decay > 0.0 && temperature_decay <= 1.0,
          "temperature_decay must lie in (0, 1]");
  require(min_temperature > 0.0, "min_temperature must be positive");
  require(cl_temperature > 0.0, "contrastive temperature must be positive");
  require(alphas.pred_source >= 0.0 && alphas.kl >= 0.0 && alphas.cl >= 0.0,
          "loss weights must be non-negative");
  require(init_std > 0.0, "init_std must be positive");
  require(weight_decay >= 0.0, "weight_decay must be non-negative");
  require(floors.sigma > 0.0 && floors.m > 0.0 && floors.norm > 0.0, "floors must be positive");
}

std::string_view param_name(Param p) {
  static constexpr std::string_view kNames[kParamCount] = {
      "user_source", "user_target", "entity", "item_source", "item_target",
      "gate_w1",     "gate_b1",     "gate_w2", "gate_b2"};
  return kNames[static_cast<std::size_t>(p)];
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z;
  for (std::size_t k = 0; k < kParamCount; ++k) {
    z.tensors[k] = Matrix(tensors[k].rows(), tensors[k].cols());
  }
  return z;
}

bool ModelParameters::all_finite() const {
  for (const auto& t : tensors) {
    for (double v : t.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::size_t ModelParameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

ModelGraphs build_graphs(const InteractionGraph& source, const InteractionGraph& train_target,
                         const KnowledgeLinkage& kg, const TrainConfig& config) {
  require(source.user_count == train_target.user_count,
          "build_graphs: domains must share the user index space");
  ModelGraphs g;
  g.variant = config.variant;
  g.users = train_target.user_count;
  AssembleOptions opts;
  opts.use_knowledge = g.uses_entities();
  opts.kg_hop_radius = config.kg_hop_radius;
  if (g.uses_source()) {
    AssembledGraph a = assemble_adjacency(source, kg, opts);
    g.source_layout = a.layout;
    g.source = normalize_symmetric(a.adjacency);
    g.duplicate_edges += a.duplicate_count;
  }
  AssembledGraph t = assemble_adjacency(train_target, kg, opts);
  g.target_layout = t.layout;
  g.target = normalize_symmetric(t.adjacency);
  g.duplicate_edges += t.duplicate_count;
  return g;
}

ModelParameters init_parameters(const ModelGraphs& g, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.embedding_dim;
  const std::size_t h = cfg.gate_hidden;
  ModelParameters p;
  p[Param::UserTarget] = Matrix(g.users, d);
  if (g.uses_source()) {
    p[Param::UserSource] = Matrix(g.users, d);
    p[Param::GateW1] = Matrix(d, h);
    p[Param::GateB1] = Matrix(1, h);
    p[Param::GateW2] = Matrix(h, 1);
    p[Param::GateB2] = Matrix(1, 1);
  }
  if (g.uses_entities()) p[Param::Entity] = Matrix(g.target_layout.entities, d);
  if (g.variant == Variant::NoKg) p[Param::ItemSource] = Matrix(g.source_layout.items, d);
  if (!g.uses_entities()) p[Param::ItemTarget] = Matrix(g.target_layout.items, d);

  for (Param t : {Param::UserSource, Param::UserTarget, Param::Entity, Param::ItemSource,
                  Param::ItemTarget}) {
    fill_normal(p[t], cfg.seed, t, cfg.init_std);
  }
  // Gate layers: scaled normal weights, zero biases.
  fill_normal(p[Param::GateW1], cfg.seed, Param::GateW1, 1.0 / std::sqrt(static_cast<double>(d)));
  fill_normal(p[Param::GateW2], cfg.seed, Param::GateW2, 1.0 / std::sqrt(static_cast<double>(h)));
  return p;
}

StepDraws draw_step(std::uint64_t seed, std::uint64_t epoch, std::uint64_t step,
                    std::span<const TrainingRow> rows, std::uint32_t dim) {
  CounterStream gate(seed, kGateStream, epoch, step);
  CounterStream noise(seed, kNoiseStream, epoch, step);
  StepDraws d{std::vector<double>(rows.size()), Matrix(rows.size(), dim)};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::uint64_t key = (static_cast<std::uint64_t>(rows[r].user) << 32) | r;
    d.uniform[r] = gate.uniform(key);
    for (std::uint32_t k = 0; k < dim; ++k) d.normal(r, k) = noise.normal(key * dim + k);
  }
  return d;
}

ObjectiveResult evaluate_objective(const ModelGraphs& g, const ModelParameters& p,
                                   const TrainConfig& cfg, std::span<const TrainingRow> rows,
                                   const StepDraws& draws, const ObjectiveOptions& opt) {
  require(!rows.empty(), "evaluate_objective: empty batch");
  const std::size_t b = rows.size();
  const std::size_t d = cfg.embedding_dim;
  const Alphas alphas = cfg.effective_alphas();
  const bool bpr = cfg.loss == PredictionLoss::Bpr;
  const auto pred_loss = bpr ? bpr_loss : bce_loss;
  const auto pred_grad = bpr ? bpr_loss_grad : bce_loss_grad;

  Encoded enc = encode(g, p, cfg);
  const Matrix& xt = enc.target.output();
  const NodeLayout& lt = g.target_layout;
  Matrix et = gather_users(xt, rows);

  ObjectiveResult res;
  std::vector<double> t_pos(b), t_neg(b), s_pos(b), s_neg(b);

  // Fused user vector F = mixed + E^T (TargetOnly: F = E^T).
  Matrix fused = et;
  Matrix h, mixed;
  MixedRepresentation mix;
  GateActivations acts;
  KlBound kl;
  ContrastiveLoss cl;
  const Matrix* xs = nullptr;
  if (g.uses_source()) {
    xs = &enc.source.output();
    Matrix es = gather_users(*xs, rows);
    h = merge_representations(es, et);
    acts = gate_forward(h, p.gate());
    res.gates.resize(b);
    for (std::size_t r = 0; r < b; ++r) {
      res.gates[r] = opt.fixed_gate ? *opt.fixed_gate
                                    : gumbel_sigmoid(acts.logits[r], draws.uniform[r],
                                                     opt.temperature);
    }
    res.stats = opt.frozen_stats ? *opt.frozen_stats : batch_statistics(h, cfg.floors.sigma);
    mix = mix_noise(h, res.gates, res.stats, draws.normal);
    for (std::size_t r = 0; r < b; ++r) axpy(1.0, mix.mixed.row(r), fused.row(r));

    kl = l_kl(res.gates, h, res.stats, cfg.floors.m, opt.with_grad);
    cl = l_cl(et, mix.mixed, cfg.cl_temperature, cfg.floors.norm, opt.with_grad);
    res.kl_m_floored = kl.m_floored;
    for (double gate : res.gates) res.kl_m += (1.0 - gate) * (1.0 - gate);
    res.min_norm = cl.min_norm;

    const NodeLayout& ls = g.source_layout;
    for (std::size_t r = 0; r < b; ++r) {
      s_pos[r] = dot(fused.row(r), xs->row(ls.item(rows[r].source_pos)));
      s_neg[r] = dot(fused.row(r), xs->row(ls.item(rows[r].source_neg)));
    }
  }
  for (std::size_t r = 0; r < b; ++r) {
    t_pos[r] = dot(fused.row(r), xt.row(lt.item(rows[r].target_pos)));
    t_neg[r] = dot(fused.row(r), xt.row(lt.item(rows[r].target_neg)));
  }

  const double l_t = pred_loss(t_pos, t_neg);
  const double l_s = g.uses_source() ? pred_loss(s_pos, s_neg) : 0.0;
  res.losses = total_loss(l_t, l_s, kl.value, cl.value, alphas);
  if (!opt.with_grad) return res;

  // Reverse pass.
  res.grads = p.zeros_like();
  Matrix g_fused(b, d);
  Matrix g_xt(xt.rows(), d);
  Matrix g_xs;
  std::vector<double> gp(b), gn(b);

  pred_grad(t_pos, t_neg, gp, gn);
  for (std::size_t r = 0; r < b; ++r) {
    auto ip = lt.item(rows[r].target_pos);
    auto in = lt.item(rows[r].target_neg);
    axpy(gp[r], xt.row(ip), g_fused.row(r));
    axpy(gn[r], xt.row(in), g_fused.row(r));
    axpy(gp[r], fused.row(r), g_xt.row(ip));
    axpy(gn[r], fused.row(r), g_xt.row(in));
  }

  Matrix g_et = g_fused;
  if (g.uses_source()) {
    const NodeLayout& ls = g.source_layout;
    g_xs = Matrix(xs->rows(), d);
    if (alphas.pred_source > 0.0) {
      pred_grad(s_pos, s_neg, gp, gn);
      for (std::size_t r = 0; r < b; ++r) {
        const double wp = alphas.pred_source * gp[r];
        const double wn = alphas.pred_source * gn[r];
        auto ip = ls.item(rows[r].source_pos);
        auto in = ls.item(rows[r].source_neg);
        axpy(wp, xs->row(ip), g_fused.row(r));
        axpy(wn, xs->row(in), g_fused.row(r));
        axpy(wp, fused.row(r), g_xs.row(ip));
        axpy(wn, fused.row(r), g_xs.row(in));
      }
      g_et = g_fused;
    }

    Matrix g_mixed = g_fused;
    Matrix g_h(b, d);
    std::vector<double> g_gate(b, 0.0);
    if (alphas.kl > 0.0) {
      for (std::size_t r = 0; r < b; ++r) {
        g_gate[r] += alphas.kl * kl.grad_lambda[r];
        axpy(alphas.kl, kl.grad_h.row(r), g_h.row(r));
      }
    }
    if (alphas.cl > 0.0) {
      for (std::size_t r = 0; r < b; ++r) {
        axpy(alphas.cl, cl.grad_target.row(r), g_et.row(r));
        axpy(alphas.cl, cl.grad_mixed.row(r), g_mixed.row(r));
      }
    }
    // mixed = gate * H + (1 - gate) * eps, eps constant.
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t k = 0; k < d; ++k) {
        g_gate[r] += g_mixed(r, k) * (h(r, k) - mix.noise(r, k));
        g_h(r, k) += res.gates[r] * g_mixed(r, k);
      }
    }
    if (!opt.fixed_gate) {
      std::vector<double> g_logit(b);
      for (std::size_t r = 0; r < b; ++r) {
        g_logit[r] = g_gate[r] * gumbel_sigmoid_slope(res.gates[r], opt.temperature);
      }
      ModelParameters& G = res.grads;
      gate_backward(h, p.gate(), acts, g_logit,
                    {G[Param::GateW1], G[Param::GateB1], G[Param::GateW2], G[Param::GateB2]},
                    g_h);
    }
    // H = E^S + E^T
    for (std::size_t r = 0; r < b; ++r) {
      axpy(1.0, g_h.row(r), g_xs.row(ls.user(rows[r].user)));
      axpy(1.0, g_h.row(r), g_et.row(r));
    }
  }
  for (std::size_t r = 0; r < b; ++r) axpy(1.0, g_et.row(r), g_xt.row(lt.user(rows[r].user)));

  Matrix g_e0t = backprop_propagate(g_xt, enc.target, g.target);
  ModelParameters& G = res.grads;
  add_rows(G[Param::UserTarget], g_e0t, 0, lt.users);
  if (g.uses_entities()) {
    add_rows(G[Param::Entity], g_e0t, lt.entity(0), lt.entities);
  } else {
    add_rows(G[Param::ItemTarget], g_e0t, lt.item(0), lt.items);
  }
  if (g.uses_source()) {
    const NodeLayout& ls = g.source_layout;
    Matrix g_e0s = backprop_propagate(g_xs, enc.source, g.source);
    add_rows(G[Param::UserSource], g_e0s, 0, ls.users);
    if (g.uses_entities()) {
      add_rows(G[Param::Entity], g_e0s, ls.entity(0), ls.entities);
    } else {
      add_rows(G[Param::ItemSource], g_e0s, ls.item(0), ls.items);
    }
  }
  return res;
}

ScoringModel build_scoring(const ModelGraphs& g, const ModelParameters& p,
                           const TrainConfig& cfg, std::vector<double>* gate_probability) {
  Encoded enc = encode(g, p, cfg);
  const Matrix& xt = enc.target.output();
  const NodeLayout& lt = g.target_layout;
  const std::size_t d = cfg.embedding_dim;

  ScoringModel s{Matrix(g.users, d), Matrix(lt.items, d)};
  for (std::uint32_t i = 0; i < lt.items; ++i) {
    std::copy(xt.row(lt.item(i)).begin(), xt.row(lt.item(i)).end(), s.items.row(i).begin());
  }
  Matrix et(g.users, d);
  for (std::uint32_t u = 0; u < g.users; ++u) {
    std::copy(xt.row(lt.user(u)).begin(), xt.row(lt.user(u)).end(), et.row(u).begin());
  }
  if (!g.uses_source()) {
    s.users = std::move(et);
    return s;
  }
  const Matrix& xs = enc.source.output();
  Matrix es(g.users, d);
  for (std::uint32_t u = 0; u < g.users; ++u) {
    std::copy(xs.row(g.source_layout.user(u)).begin(), xs.row(g.source_layout.user(u)).end(),
              es.row(u).begin());
  }
  Matrix h = merge_representations(es, et);
  GateActivations acts = gate_forward(h, p.gate());
  std::vector<double> prob(g.users);
  for (std::uint32_t u = 0; u < g.users; ++u) prob[u] = sigmoid(acts.logits[u]);
  if (gate_probability) *gate_probability = prob;
  Matrix mixed = mix_expected(h, prob, batch_statistics(h, cfg.floors.sigma));
  for (std::uint32_t u = 0; u < g.users; ++u) {
    for (std::size_t k = 0; k < d; ++k) s.users(u, k) = mixed(u, k) + et(u, k);
  }
  return s;
}

}  // namespace cotrans
