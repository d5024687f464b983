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

// Synthetic cross-domain data. Users carry a latent preference vector shared
// by both domains. Items belong to topic clusters; every item is linked to its
// own entity, and entities of same-cluster items are joined in the KG across
// both catalogues. Item-to-item-entity adjacency matters: item input rows are
// zero, so an item's layer-2 representation is made of the entities next to
// its own entity, and a user's of the entities of the items it touched. Only
// entity-entity edges between item entities put both on the same rows.
// Source histories are partly polluted with uniformly random "irrelevant"
// interactions at a per-user rate.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cotrans/dataio.hpp"
#include "cotrans/error.hpp"

namespace cotrans {

namespace {

using Vec = std::vector<double>;

Vec normal_vec(std::mt19937_64& rng, std::uint32_t k) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec v(k);
  for (double& x : v) x = n(rng);
  return v;
}

double beta_draw(std::mt19937_64& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  double x = ga(rng);
  double y = gb(rng);
  return x + y > 0.0 ? x / (x + y) : a / (a + b);
}

// Weighted sampling without replacement (Gumbel top-k) with weights
// exp(logit). Indices in `banned` are skipped.
std::vector<std::uint32_t> sample_top_k(std::mt19937_64& rng, const Vec& logits,
                                        std::uint32_t k, const std::vector<bool>& banned) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, std::uint32_t>> keys;
  keys.reserve(logits.size());
  for (std::uint32_t i = 0; i < logits.size(); ++i) {
    double m = u(rng);
    if (banned[i]) continue;
    double g = -std::log(-std::log(std::max(m, 1e-300)));
    keys.emplace_back(logits[i] + g, i);
  }
  k = std::min<std::uint32_t>(k, static_cast<std::uint32_t>(keys.size()));
  std::partial_sort(keys.begin(), keys.begin() + k, keys.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::uint32_t> out;
  for (std::uint32_t r = 0; r < k; ++r) out.push_back(keys[r].second);
  return out;
}

struct Catalogue {
  std::vector<Vec> latent;
  std::vector<std::uint32_t> cluster;
};

Catalogue make_catalogue(std::mt19937_64& rng, const SynthSpec& spec, std::uint32_t count,
                         const std::vector<Vec>& centroids) {
  Catalogue c;
  std::uniform_int_distribution<std::uint32_t> pick(0, spec.clusters - 1);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t cl = pick(rng);
    Vec v = normal_vec(rng, spec.latent_dim);
    for (std::uint32_t k = 0; k < spec.latent_dim; ++k) {
      v[k] = centroids[cl][k] + spec.item_spread * v[k];
    }
    c.latent.push_back(std::move(v));
    c.cluster.push_back(cl);
  }
  return c;
}

}  // namespace

SyntheticData generate_synthetic(const SynthSpec& spec) {
  require(spec.users > 0 && spec.source_items > 0 && spec.target_items > 0 &&
              spec.latent_dim > 0 && spec.clusters > 0,
          "generate_synthetic: counts must be positive");
  require(spec.irrelevant_fraction >= 0.0 && spec.irrelevant_fraction <= 1.0,
          "generate_synthetic: irrelevant fraction must lie in [0, 1]");
  require(spec.source_per_user <= spec.source_items && spec.target_per_user <= spec.target_items,
          "generate_synthetic: more interactions per user than items");
  require(spec.kg_noise >= 0.0 && spec.kg_noise <= 1.0,
          "generate_synthetic: kg noise must lie in [0, 1]");
  require(spec.map_coverage >= 0.0 && spec.map_coverage <= 1.0,
          "generate_synthetic: map coverage must lie in [0, 1]");
  require(spec.reliability_concentration > 0.0,
          "generate_synthetic: reliability concentration must be positive");

  std::mt19937_64 rng(spec.seed);
  std::vector<Vec> centroids;
  for (std::uint32_t c = 0; c < spec.clusters; ++c) {
    centroids.push_back(normal_vec(rng, spec.latent_dim));
  }
  Catalogue src = make_catalogue(rng, spec, spec.source_items, centroids);
  Catalogue tgt = make_catalogue(rng, spec, spec.target_items, centroids);
  std::vector<Vec> users;
  for (std::uint32_t u = 0; u < spec.users; ++u) users.push_back(normal_vec(rng, spec.latent_dim));

  SyntheticData out;
  DatasetBundle& b = out.bundle;
  for (std::uint32_t u = 0; u < spec.users; ++u) b.users.intern("u" + std::to_string(u));
  for (std::uint32_t i = 0; i < spec.source_items; ++i) {
    b.source_items.intern("s" + std::to_string(i));
  }
  for (std::uint32_t i = 0; i < spec.target_items; ++i) {
    b.target_items.intern("t" + std::to_string(i));
  }

  // Knowledge graph: one entity per mapped item, then random links among
  // entities of the same cluster (a `kg_noise` share goes anywhere).
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::vector<std::uint32_t>> by_cluster(spec.clusters);
  std::vector<std::uint32_t> entity_cluster;
  auto link_items = [&](const Catalogue& cat, const char* prefix, std::vector<Edge>& links) {
    for (std::uint32_t i = 0; i < cat.latent.size(); ++i) {
      if (coin(rng) >= spec.map_coverage) continue;
      std::uint32_t e = b.entities.intern(std::string(prefix) + std::to_string(i));
      links.emplace_back(i, e);
      by_cluster[cat.cluster[i]].push_back(e);
      entity_cluster.push_back(cat.cluster[i]);
    }
  };
  link_items(src, "ent_s", b.kg.source_item_entity);
  link_items(tgt, "ent_t", b.kg.target_item_entity);
  const auto entities = static_cast<std::uint32_t>(entity_cluster.size());
  if (entities > 1) {
    std::uniform_int_distribution<std::uint32_t> any(0, entities - 1);
    for (std::uint32_t e = 0; e < entities; ++e) {
      const auto& mates = by_cluster[entity_cluster[e]];
      for (std::uint32_t l = 0; l < spec.entity_links_per_item; ++l) {
        std::uint32_t other;
        if (coin(rng) < spec.kg_noise || mates.size() < 2) {
          other = any(rng);
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, mates.size() - 1);
          other = mates[pick(rng)];
        }
        if (other != e) b.kg.entity_edges.emplace_back(std::min(e, other), std::max(e, other));
      }
    }
  }
  std::sort(b.kg.entity_edges.begin(), b.kg.entity_edges.end());
  b.kg.entity_edges.erase(std::unique(b.kg.entity_edges.begin(), b.kg.entity_edges.end()),
                          b.kg.entity_edges.end());
  b.kg.entity_count = b.entities.size();

  auto affinity = [&](const Vec& user, const Catalogue& cat) {
    Vec logits(cat.latent.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      double s = 0.0;
      for (std::uint32_t k = 0; k < spec.latent_dim; ++k) s += user[k] * cat.latent[i][k];
      logits[i] = spec.affinity_scale * s;
    }
    return logits;
  };

  const double rho = spec.irrelevant_fraction;
  const double kappa = spec.reliability_concentration;
  std::vector<std::pair<Edge, bool>> source_edges;
  for (std::uint32_t u = 0; u < spec.users; ++u) {
    double rate = rho;
    if (rho > 0.0 && rho < 1.0) rate = beta_draw(rng, rho * kappa, (1.0 - rho) * kappa);
    std::binomial_distribution<std::uint32_t> irr(spec.source_per_user, rate);
    std::uint32_t n_irrelevant = irr(rng);
    std::uint32_t n_relevant = spec.source_per_user - n_irrelevant;

    std::vector<bool> taken(spec.source_items, false);
    for (std::uint32_t i : sample_top_k(rng, affinity(users[u], src), n_relevant, taken)) {
      taken[i] = true;
      source_edges.push_back({{u, i}, true});
    }
    Vec flat(spec.source_items, 0.0);
    for (std::uint32_t i : sample_top_k(rng, flat, n_irrelevant, taken)) {
      taken[i] = true;
      source_edges.push_back({{u, i}, false});
    }

    std::vector<bool> none(spec.target_items, false);
    for (std::uint32_t i :
         sample_top_k(rng, affinity(users[u], tgt), spec.target_per_user, none)) {
      b.target.edges.emplace_back(u, i);
    }
  }

  std::sort(source_edges.begin(), source_edges.end());
  for (const auto& [e, rel] : source_edges) {
    b.source.edges.push_back(e);
    out.source_relevant.push_back(rel);
  }
  std::sort(b.target.edges.begin(), b.target.edges.end());

  b.source.domain = Domain::Source;
  b.target.domain = Domain::Target;
  b.source.user_count = b.target.user_count = spec.users;
  b.source.item_count = spec.source_items;
  b.target.item_count = spec.target_items;
  b.report.input_edges = b.edge_count();
  return out;
}

std::string write_flags_tsv(const SyntheticData& data) {
  const DatasetBundle& b = data.bundle;
  std::string out;
  for (std::size_t k = 0; k < b.source.edges.size(); ++k) {
    const auto& [u, i] = b.source.edges[k];
    out += b.users.name(u) + '\t' + b.source_items.name(i) + '\t' +
           (data.source_relevant[k] ? "relevant" : "irrelevant") + '\n';
  }
  return out;
}

}  // namespace cotrans
