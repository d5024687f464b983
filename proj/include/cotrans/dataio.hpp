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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cotrans/graph.hpp"

namespace cotrans {

/// Dense index <-> external string id, indices assigned in first-seen order.
class IdMap {
 public:
  std::uint32_t intern(std::string_view id);
  std::optional<std::uint32_t> find(std::string_view id) const;
  const std::string& name(std::uint32_t index) const { return names_[index]; }
  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(names_.size()); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  friend bool operator==(const IdMap& a, const IdMap& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Per-user held-out target interactions and the remaining training graph.
struct LeaveOneOutSplit {
  InteractionGraph train_target;
  std::vector<Edge> validation;  // (user, target item), one per evaluated user
  std::vector<Edge> test;
  std::size_t excluded_users = 0;
};

struct LoadReport {
  std::size_t input_edges = 0;         // well-formed interaction lines read
  std::size_t dropped_user_edges = 0;  // lines of users missing from one domain
  std::size_t duplicate_edges = 0;
  std::size_t dropped_users = 0;
  std::size_t unknown_map_items = 0;
  std::vector<std::string> malformed;  // "file:line: reason"
};

struct DatasetBundle {
  InteractionGraph source;
  InteractionGraph target;
  KnowledgeLinkage kg;
  IdMap users;
  IdMap source_items;
  IdMap target_items;
  IdMap entities;
  std::optional<LeaveOneOutSplit> split;
  LoadReport report;

  std::size_t edge_count() const { return source.edges.size() + target.edges.size(); }
};

struct BundlePaths {
  std::filesystem::path source;
  std::filesystem::path target;
  std::filesystem::path kg;  // optional (empty path = no KG)
  std::filesystem::path map_source;
  std::filesystem::path map_target;
  std::filesystem::path id_dir;  // optional persisted id maps
  std::filesystem::path split;   // optional held-out assignments
};

/// Standard file names inside a dataset directory.
BundlePaths bundle_paths_in(const std::filesystem::path& dir);

DatasetBundle load_bundle(const BundlePaths& paths);
DatasetBundle load_bundle_dir(const std::filesystem::path& dir);

/// Writes interactions, KG, maps, id maps and (if present) the split.
void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Reads non-empty, non-comment TSV lines; calls back with the 1-based line
/// number and the tab-separated fields.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_tsv(
    const std::filesystem::path& path);

std::string write_interactions_tsv(const InteractionGraph& graph, const IdMap& users,
                                   const IdMap& items);

struct SynthSpec {
  std::uint32_t users = 500;
  std::uint32_t source_items = 300;
  std::uint32_t target_items = 300;
  std::uint32_t latent_dim = 8;
  std::uint32_t clusters = 16;
  /// KG edges from each item entity to other item entities (either
  /// catalogue) of the same cluster.
  std::uint32_t entity_links_per_item = 4;
  /// Fraction of those edges that go to a random entity instead.
  double kg_noise = 0.1;
  std::uint32_t source_per_user = 30;
  std::uint32_t target_per_user = 4;
  double irrelevant_fraction = 0.3;  // rho
  /// Concentration of the per-user irrelevance rate (Beta with mean rho).
  /// Smaller values make reliability more uneven across users.
  double reliability_concentration = 2.0;
  double affinity_scale = 1.0;
  double item_spread = 0.5;
  double map_coverage = 1.0;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  DatasetBundle bundle;
  /// Aligned with bundle.source.edges: true for preference-driven edges.
  std::vector<bool> source_relevant;
};

SyntheticData generate_synthetic(const SynthSpec& spec);

std::string write_flags_tsv(const SyntheticData& data);

}  // namespace cotrans
