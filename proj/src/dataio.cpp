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

#include "cotrans/dataio.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cotrans/error.hpp"

namespace fs = std::filesystem;

namespace cotrans {

std::uint32_t IdMap::intern(std::string_view id) {
  auto it = index_.find(std::string(id));
  if (it != index_.end()) return it->second;
  auto idx = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(id);
  index_.emplace(names_.back(), idx);
  return idx;
}

std::optional<std::uint32_t> IdMap::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::size_t, std::vector<std::string>>> read_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos
                                                                   : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.emplace_back(lineno, std::move(fields));
  }
  return rows;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

BundlePaths bundle_paths_in(const fs::path& dir) {
  // Optional members stay empty when the file is absent.
  auto optional = [&](const char* name) {
    fs::path f = dir / name;
    return fs::exists(f) ? f : fs::path{};
  };
  BundlePaths p;
  p.source = dir / "source.tsv";
  p.target = dir / "target.tsv";
  p.kg = optional("kg.tsv");
  p.map_source = optional("map_source.tsv");
  p.map_target = optional("map_target.tsv");
  p.id_dir = optional("ids");
  p.split = optional("split.tsv");
  return p;
}

namespace {

using Pair = std::pair<std::string, std::string>;

struct PairFile {
  std::vector<std::pair<std::size_t, Pair>> rows;
};

PairFile read_pairs(const fs::path& path, bool triples_allowed, LoadReport& report) {
  PairFile f;
  for (auto& [lineno, fields] : read_tsv(path)) {
    bool ok = fields.size() == 2 || (triples_allowed && fields.size() == 3);
    ok = ok && !fields.front().empty() && !fields.back().empty();
    if (!ok) {
      report.malformed.push_back(path.filename().string() + ":" + std::to_string(lineno) +
                                 ": expected " + (triples_allowed ? "2 or 3" : "2") +
                                 " non-empty fields");
      continue;
    }
    // head <TAB> relation <TAB> tail: the relation is ignored.
    f.rows.push_back({lineno, {fields.front(), fields.back()}});
  }
  return f;
}

void seed_ids(IdMap& map, const fs::path& file) {
  if (!fs::exists(file)) return;
  for (auto& [lineno, fields] : read_tsv(file)) map.intern(fields.front());
}

void finish_graph(InteractionGraph& g, LoadReport& report) {
  std::sort(g.edges.begin(), g.edges.end());
  auto last = std::unique(g.edges.begin(), g.edges.end());
  report.duplicate_edges += static_cast<std::size_t>(g.edges.end() - last);
  g.edges.erase(last, g.edges.end());
}

std::string join_ids(const IdMap& map) {
  std::string out;
  for (const auto& n : map.names()) {
    out += n;
    out += '\n';
  }
  return out;
}

}  // namespace

DatasetBundle load_bundle(const BundlePaths& paths) {
  for (const auto* p : {&paths.source, &paths.target}) {
    if (!fs::exists(*p)) fail(ErrorKind::Io, "no such file: " + p->string());
  }
  for (const auto* p : {&paths.kg, &paths.map_source, &paths.map_target, &paths.split}) {
    if (!p->empty() && !fs::exists(*p)) fail(ErrorKind::Io, "no such file: " + p->string());
  }

  DatasetBundle b;
  LoadReport& report = b.report;
  PairFile src = read_pairs(paths.source, false, report);
  PairFile tgt = read_pairs(paths.target, false, report);
  report.input_edges = src.rows.size() + tgt.rows.size();

  if (!paths.id_dir.empty()) {
    seed_ids(b.users, paths.id_dir / "users.tsv");
    seed_ids(b.source_items, paths.id_dir / "source_items.tsv");
    seed_ids(b.target_items, paths.id_dir / "target_items.tsv");
    seed_ids(b.entities, paths.id_dir / "entities.tsv");
  }

  std::unordered_set<std::string> in_source, in_target;
  for (const auto& [n, p] : src.rows) in_source.insert(p.first);
  for (const auto& [n, p] : tgt.rows) in_target.insert(p.first);
  auto shared = [&](const std::string& u) {
    return in_source.count(u) != 0 && in_target.count(u) != 0;
  };
  {
    std::unordered_set<std::string> dropped;
    for (const auto* s : {&in_source, &in_target}) {
      for (const auto& u : *s) {
        if (!shared(u)) dropped.insert(u);
      }
    }
    report.dropped_users = dropped.size();
  }

  for (const auto* rows : {&src.rows, &tgt.rows}) {
    for (const auto& [n, p] : *rows) {
      if (shared(p.first)) b.users.intern(p.first);
    }
  }

  auto fill = [&](const PairFile& f, IdMap& items, InteractionGraph& g, Domain d) {
    g.domain = d;
    for (const auto& [n, p] : f.rows) {
      if (!shared(p.first)) {
        ++report.dropped_user_edges;
        continue;
      }
      g.edges.emplace_back(*b.users.find(p.first), items.intern(p.second));
    }
  };
  fill(src, b.source_items, b.source, Domain::Source);
  fill(tgt, b.target_items, b.target, Domain::Target);
  b.source.user_count = b.target.user_count = b.users.size();
  b.source.item_count = b.source_items.size();
  b.target.item_count = b.target_items.size();
  finish_graph(b.source, report);
  finish_graph(b.target, report);
  if (b.users.size() == 0) fail(ErrorKind::InvalidArgument, "no users shared by both domains");

  auto load_map = [&](const fs::path& path, const IdMap& items, std::vector<Edge>& out) {
    if (path.empty()) return;
    for (const auto& [n, p] : read_pairs(path, false, report).rows) {
      auto item = items.find(p.first);
      if (!item) {
        ++report.unknown_map_items;
        continue;
      }
      out.emplace_back(*item, b.entities.intern(p.second));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  };
  load_map(paths.map_source, b.source_items, b.kg.source_item_entity);
  load_map(paths.map_target, b.target_items, b.kg.target_item_entity);
  if (!paths.kg.empty()) {
    for (const auto& [n, p] : read_pairs(paths.kg, true, report).rows) {
      b.kg.entity_edges.emplace_back(b.entities.intern(p.first), b.entities.intern(p.second));
    }
  }
  b.kg.entity_count = b.entities.size();

  if (!paths.split.empty()) {
    LeaveOneOutSplit split;
    split.train_target = b.target;
    std::vector<Edge> held;
    for (auto& [lineno, fields] : read_tsv(paths.split)) {
      if (fields.size() != 3) {
        fail(ErrorKind::Parse, paths.split.string() + ":" + std::to_string(lineno) +
                                   ": expected user, item, role");
      }
      auto u = b.users.find(fields[0]);
      auto i = b.target_items.find(fields[1]);
      if (!u || !i) {
        fail(ErrorKind::Parse, paths.split.string() + ":" + std::to_string(lineno) +
                                   ": unknown user or item");
      }
      Edge e{*u, *i};
      if (fields[2] == "validation") {
        split.validation.push_back(e);
      } else if (fields[2] == "test") {
        split.test.push_back(e);
      } else {
        fail(ErrorKind::Parse, paths.split.string() + ":" + std::to_string(lineno) +
                                   ": unknown role '" + fields[2] + "'");
      }
      held.push_back(e);
    }
    std::sort(held.begin(), held.end());
    auto& edges = split.train_target.edges;
    edges.erase(std::remove_if(edges.begin(), edges.end(),
                               [&](const Edge& e) {
                                 return std::binary_search(held.begin(), held.end(), e);
                               }),
                edges.end());
    split.excluded_users = b.users.size() - split.test.size();
    b.split = std::move(split);
  }
  return b;
}

DatasetBundle load_bundle_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "no such directory: " + dir.string());
  return load_bundle(bundle_paths_in(dir));
}

std::string write_interactions_tsv(const InteractionGraph& graph, const IdMap& users,
                                   const IdMap& items) {
  std::string out;
  for (const auto& [u, i] : graph.edges) {
    out += users.name(u);
    out += '\t';
    out += items.name(i);
    out += '\n';
  }
  return out;
}

void write_bundle(const DatasetBundle& b, const fs::path& dir) {
  fs::create_directories(dir / "ids");
  BundlePaths p;
  p.source = dir / "source.tsv";
  p.target = dir / "target.tsv";
  p.kg = dir / "kg.tsv";
  p.map_source = dir / "map_source.tsv";
  p.map_target = dir / "map_target.tsv";
  p.id_dir = dir / "ids";
  p.split = dir / "split.tsv";
  write_file_atomic(p.id_dir / "users.tsv", join_ids(b.users));
  write_file_atomic(p.id_dir / "source_items.tsv", join_ids(b.source_items));
  write_file_atomic(p.id_dir / "target_items.tsv", join_ids(b.target_items));
  write_file_atomic(p.id_dir / "entities.tsv", join_ids(b.entities));
  write_file_atomic(p.source, write_interactions_tsv(b.source, b.users, b.source_items));
  write_file_atomic(p.target, write_interactions_tsv(b.target, b.users, b.target_items));

  auto pairs = [](const std::vector<Edge>& edges, const IdMap& a, const IdMap& c) {
    std::string out;
    for (const auto& [x, y] : edges) out += a.name(x) + '\t' + c.name(y) + '\n';
    return out;
  };
  write_file_atomic(p.kg, pairs(b.kg.entity_edges, b.entities, b.entities));
  write_file_atomic(p.map_source, pairs(b.kg.source_item_entity, b.source_items, b.entities));
  write_file_atomic(p.map_target, pairs(b.kg.target_item_entity, b.target_items, b.entities));
  if (b.split) {
    std::string out;
    for (const auto& [u, i] : b.split->validation) {
      out += b.users.name(u) + '\t' + b.target_items.name(i) + "\tvalidation\n";
    }
    for (const auto& [u, i] : b.split->test) {
      out += b.users.name(u) + '\t' + b.target_items.name(i) + "\ttest\n";
    }
    write_file_atomic(p.split, out);
  }
}

}  // namespace cotrans
