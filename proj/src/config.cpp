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

#include "cotrans/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>

#include "cotrans/error.hpp"

namespace cotrans {

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorKind::Parse,
       "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define COTRANS_DOUBLE(name, member)                                                    \
  Field {                                                                               \
    name, [](RunConfig& c, std::string_view v) { c.member = to_double(name, v); },     \
        [](const RunConfig& c) { return fmt_double(c.member); }                         \
  }
#define COTRANS_INT(name, member)                                                       \
  Field {                                                                               \
    name,                                                                               \
        [](RunConfig& c, std::string_view v) {                                          \
          c.member = to_int<std::decay_t<decltype(c.member)>>(name, v);                 \
        },                                                                              \
        [](const RunConfig& c) { return std::to_string(c.member); }                     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      Field{"variant",
            [](RunConfig& c, std::string_view v) {
              auto parsed = parse_variant(v);
              if (!parsed) bad_value("variant", v);
              c.train.variant = *parsed;
            },
            [](const RunConfig& c) { return std::string(variant_name(c.train.variant)); }},
      COTRANS_INT("embedding_dim", train.embedding_dim),
      COTRANS_INT("gate_hidden", train.gate_hidden),
      COTRANS_INT("layers", train.layers),
      COTRANS_INT("batch_size", train.batch_size),
      COTRANS_INT("max_epochs", train.max_epochs),
      COTRANS_INT("patience", train.patience),
      COTRANS_DOUBLE("learning_rate", train.learning_rate),
      COTRANS_DOUBLE("gumbel_temperature", train.gumbel_temperature),
      COTRANS_DOUBLE("temperature_decay", train.temperature_decay),
      COTRANS_DOUBLE("min_temperature", train.min_temperature),
      COTRANS_DOUBLE("cl_temperature", train.cl_temperature),
      COTRANS_DOUBLE("alpha1", train.alphas.pred_source),
      COTRANS_DOUBLE("alpha2", train.alphas.kl),
      COTRANS_DOUBLE("alpha3", train.alphas.cl),
      COTRANS_DOUBLE("init_std", train.init_std),
      COTRANS_DOUBLE("weight_decay", train.weight_decay),
      Field{"prediction_loss",
            [](RunConfig& c, std::string_view v) {
              if (v == "bpr") {
                c.train.loss = PredictionLoss::Bpr;
              } else if (v == "bce") {
                c.train.loss = PredictionLoss::Bce;
              } else {
                bad_value("prediction_loss", v);
              }
            },
            [](const RunConfig& c) {
              return std::string(c.train.loss == PredictionLoss::Bpr ? "bpr" : "bce");
            }},
      COTRANS_DOUBLE("sigma_floor", train.floors.sigma),
      COTRANS_DOUBLE("m_floor", train.floors.m),
      COTRANS_DOUBLE("norm_floor", train.floors.norm),
      COTRANS_INT("kg_hop_radius", train.kg_hop_radius),
      COTRANS_INT("seed", train.seed),
      COTRANS_INT("split_seed", split_seed),
      COTRANS_INT("synth_users", synth.users),
      COTRANS_INT("synth_source_items", synth.source_items),
      COTRANS_INT("synth_target_items", synth.target_items),
      COTRANS_INT("synth_latent_dim", synth.latent_dim),
      COTRANS_INT("synth_clusters", synth.clusters),
      COTRANS_INT("synth_entity_links_per_item", synth.entity_links_per_item),
      COTRANS_DOUBLE("synth_kg_noise", synth.kg_noise),
      COTRANS_INT("synth_source_per_user", synth.source_per_user),
      COTRANS_INT("synth_target_per_user", synth.target_per_user),
      COTRANS_DOUBLE("synth_irrelevant_fraction", synth.irrelevant_fraction),
      COTRANS_DOUBLE("synth_reliability_concentration", synth.reliability_concentration),
      COTRANS_DOUBLE("synth_affinity_scale", synth.affinity_scale),
      COTRANS_DOUBLE("synth_item_spread", synth.item_spread),
      COTRANS_DOUBLE("synth_map_coverage", synth.map_coverage),
      COTRANS_INT("synth_seed", synth.seed),
  };
  return kFields;
}

#undef COTRANS_DOUBLE
#undef COTRANS_INT

}  // namespace

ConfigEntries parse_config_text(std::string_view text) {
  ConfigEntries out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::Parse, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))),
                     std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

void apply_config_entry(RunConfig& config, std::string_view key, std::string_view value) {
  if (key == "alpha_preset") {
    auto preset = alpha_preset(value);
    if (!preset) bad_value(key, value);
    config.train.alphas = *preset;
    return;
  }
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  fail(ErrorKind::Parse, "unknown config key '" + std::string(key) + "'");
}

std::string config_to_text(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(config);
    out += '\n';
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace cotrans
