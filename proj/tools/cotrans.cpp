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

// Command-line front end. Talks to the library only through cotrans.h.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cotrans/cotrans.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct ApiError {
  cotrans_status status;
  std::string message;
};

void check(cotrans_status s) {
  if (s != COTRANS_OK) throw ApiError{s, cotrans_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<cotrans_config, Deleter<cotrans_config, cotrans_config_free>>;
using Dataset = std::unique_ptr<cotrans_dataset, Deleter<cotrans_dataset, cotrans_dataset_free>>;
using Model = std::unique_ptr<cotrans_model, Deleter<cotrans_model, cotrans_model_free>>;
using Report = std::unique_ptr<cotrans_report, Deleter<cotrans_report, cotrans_report_free>>;

std::string take(char* s) {
  std::string out(s);
  cotrans_string_free(s);
  return out;
}

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string sha256(const fs::path& p) {
  char hex[65];
  check(cotrans_file_sha256(p.string().c_str(), hex));
  return hex;
}

void write_text(const fs::path& p, const std::string& text) {
  check(cotrans_write_file(p.string().c_str(), text.data(), text.size()));
}

json config_json(const cotrans_config* c) {
  char* raw = nullptr;
  check(cotrans_config_to_text(c, &raw));
  std::istringstream in(take(raw));
  json out = json::object();
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

// Run manifest: written once before the work starts, rewritten at exit.
class Manifest {
 public:
  Manifest(fs::path dir, std::string command, int argc, char** argv)
      : path_(std::move(dir) / "manifest.json"), start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["argv"] = std::vector<std::string>(argv, argv + argc);
    doc_["status"] = "running";
    doc_["started_at"] = iso_now();
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  void set_config(const cotrans_config* c, std::uint64_t seed) {
    doc_["seed"] = seed;
    doc_["config"] = config_json(c);
  }
  void input(const fs::path& p) {
    doc_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256(p)}});
  }
  void output(const fs::path& p) {
    doc_["outputs"].push_back({{"path", p.string()}, {"sha256", sha256(p)}});
  }
  void note(const std::string& key, json value) { doc_[key] = std::move(value); }
  void phase(const std::string& name) {
    auto now = std::chrono::steady_clock::now();
    doc_["timings"][name] = std::chrono::duration<double>(now - mark_).count();
    mark_ = now;
  }
  void flush() { write_text(path_, doc_.dump(2) + "\n"); }
  void finish(const std::string& status) {
    doc_["status"] = status;
    doc_["finished_at"] = iso_now();
    doc_["timings"]["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    flush();
  }

 private:
  fs::path path_;
  json doc_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point mark_ = std::chrono::steady_clock::now();
};

// Flags shared by every subcommand.
struct Common {
  std::optional<std::uint64_t> seed;
  std::string config_file;
  std::string out;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--config", c.config_file, "key = value settings file");
  auto* out = cmd->add_option("--out", c.out, "Output directory");
  if (out_required) out->required();
  cmd->add_option("--set", c.overrides, "Extra setting as key=value (repeatable)");
}

// Data inputs: either a bundle directory or individual files.
struct DataFlags {
  std::string dir;
  std::string source, target, kg, map_source, map_target;
};

void add_data(CLI::App* cmd, DataFlags& d) {
  cmd->add_option("--data", d.dir, "Dataset directory (as written by gen-synth or train)");
  cmd->add_option("--source", d.source, "Source-domain interactions TSV");
  cmd->add_option("--target", d.target, "Target-domain interactions TSV");
  cmd->add_option("--kg", d.kg, "Entity-entity triples TSV");
  cmd->add_option("--map-source", d.map_source, "Source item-entity map TSV");
  cmd->add_option("--map-target", d.map_target, "Target item-entity map TSV");
}

Dataset load_data(const DataFlags& d, Manifest* manifest) {
  cotrans_dataset* raw = nullptr;
  if (!d.dir.empty()) {
    check(cotrans_dataset_load_dir(d.dir.c_str(), &raw));
    Dataset ds(raw);
    if (manifest) {
      for (const char* f : {"source.tsv", "target.tsv", "kg.tsv", "map_source.tsv",
                            "map_target.tsv", "split.tsv"}) {
        if (fs::exists(fs::path(d.dir) / f)) manifest->input(fs::path(d.dir) / f);
      }
    }
    return ds;
  }
  if (d.source.empty() || d.target.empty()) {
    throw CLI::ValidationError("data", "either --data or both --source and --target are required");
  }
  auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
  check(cotrans_dataset_load(d.source.c_str(), d.target.c_str(), opt(d.kg), opt(d.map_source),
                             opt(d.map_target), &raw));
  Dataset ds(raw);
  if (manifest) {
    for (const auto* f : {&d.source, &d.target, &d.kg, &d.map_source, &d.map_target}) {
      if (!f->empty()) manifest->input(*f);
    }
  }
  return ds;
}

// Precedence: flag > config file > default. `flags` are applied last.
Config resolve_config(const Common& c, const std::map<std::string, std::string>& flags,
                      const char* seed_key) {
  cotrans_config* raw = nullptr;
  check(cotrans_config_new(&raw));
  Config cfg(raw);
  if (!c.config_file.empty()) check(cotrans_config_load_file(cfg.get(), c.config_file.c_str()));
  for (const auto& kv : c.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value: " + kv);
    check(cotrans_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  for (const auto& [k, v] : flags) check(cotrans_config_set(cfg.get(), k.c_str(), v.c_str()));
  if (c.seed && seed_key != nullptr) {
    check(cotrans_config_set(cfg.get(), seed_key, std::to_string(*c.seed).c_str()));
  }
  return cfg;
}

std::uint64_t config_u64(const cotrans_config* c, const std::string& key) {
  return std::stoull(config_json(c).at(key).get<std::string>());
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Training-side flags mapped onto config keys.
struct TrainFlags {
  std::optional<double> alpha1, alpha2, alpha3, lr;
  std::optional<std::uint32_t> epochs, batch, dim;
  std::string alpha_preset, variant;

  std::map<std::string, std::string> entries() const {
    std::map<std::string, std::string> m;
    if (alpha1) m["alpha1"] = fmt(*alpha1);
    if (alpha2) m["alpha2"] = fmt(*alpha2);
    if (alpha3) m["alpha3"] = fmt(*alpha3);
    if (lr) m["learning_rate"] = fmt(*lr);
    if (epochs) m["max_epochs"] = std::to_string(*epochs);
    if (batch) m["batch_size"] = std::to_string(*batch);
    if (dim) m["embedding_dim"] = std::to_string(*dim);
    if (!variant.empty()) m["variant"] = variant;
    return m;
  }
};

void add_train_flags(CLI::App* cmd, TrainFlags& t, bool with_variant) {
  cmd->add_option("--alpha1", t.alpha1, "Weight of the source prediction loss");
  cmd->add_option("--alpha2", t.alpha2, "Weight of the KL bound");
  cmd->add_option("--alpha3", t.alpha3, "Weight of the contrastive term");
  cmd->add_option("--alpha-preset", t.alpha_preset, "Named alpha triple, e.g. AM->AB");
  cmd->add_option("--lr", t.lr, "Adagrad learning rate");
  cmd->add_option("--epochs", t.epochs, "Maximum epochs");
  cmd->add_option("--batch-size", t.batch, "Rows per step");
  cmd->add_option("--dim", t.dim, "Embedding dimension");
  if (with_variant) {
    cmd->add_option("--variant", t.variant,
                    "full | no-pred-s | no-kl | no-cl | no-kg | target-only");
  }
}

// The preset is applied before the individual alphas so those can refine it.
Config resolve_train_config(const Common& c, const TrainFlags& t) {
  std::map<std::string, std::string> preset;
  if (!t.alpha_preset.empty()) preset["alpha_preset"] = t.alpha_preset;
  Config cfg = resolve_config(c, preset, nullptr);
  for (const auto& [k, v] : t.entries()) {
    check(cotrans_config_set(cfg.get(), k.c_str(), v.c_str()));
  }
  if (c.seed) check(cotrans_config_set(cfg.get(), "seed", std::to_string(*c.seed).c_str()));
  return cfg;
}

void ensure_split(cotrans_dataset* ds, const cotrans_config* cfg) {
  cotrans_dataset_stats st{};
  check(cotrans_dataset_stats_get(ds, &st));
  if (!st.has_split) check(cotrans_dataset_split(ds, config_u64(cfg, "split_seed")));
}

json dataset_json(const cotrans_dataset* ds) {
  cotrans_dataset_stats s{};
  check(cotrans_dataset_stats_get(ds, &s));
  return {{"users", s.users},
          {"source_items", s.source_items},
          {"target_items", s.target_items},
          {"entities", s.entities},
          {"source_edges", s.source_edges},
          {"target_edges", s.target_edges},
          {"entity_edges", s.entity_edges},
          {"duplicate_edges", s.duplicate_edges},
          {"dropped_users", s.dropped_users},
          {"malformed_lines", s.malformed_lines},
          {"evaluated_users", s.evaluated_users},
          {"excluded_users", s.excluded_users}};
}

struct LogSink {
  std::string lines;
};

void on_epoch(const char* line, void* user) {
  static_cast<LogSink*>(user)->lines += std::string(line) + "\n";
  std::cerr << line << "\n";
}

Model train_model(const cotrans_config* cfg, const cotrans_dataset* ds, LogSink& log) {
  cotrans_model* raw = nullptr;
  check(cotrans_train(cfg, ds, on_epoch, &log, &raw));
  return Model(raw);
}

Report evaluate(const cotrans_model* m, const cotrans_dataset* ds,
                const std::vector<std::uint32_t>& ks) {
  cotrans_report* raw = nullptr;
  check(cotrans_evaluate(m, ds, ks.data(), ks.size(), &raw));
  return Report(raw);
}

std::string metrics_tsv(const cotrans_report* r, const char* variant) {
  char* raw = nullptr;
  check(cotrans_report_metrics_tsv(r, variant, &raw));
  return take(raw);
}

// --- subcommands -----------------------------------------------------------

int cmd_train(const Common& c, const DataFlags& d, const TrainFlags& t, int argc, char** argv) {
  Config cfg = resolve_train_config(c, t);
  const fs::path out(c.out);
  fs::create_directories(out);
  Manifest manifest(out, "train", argc, argv);
  manifest.set_config(cfg.get(), config_u64(cfg.get(), "seed"));
  Dataset ds = load_data(d, &manifest);
  ensure_split(ds.get(), cfg.get());
  manifest.note("dataset", dataset_json(ds.get()));
  manifest.phase("load_seconds");
  manifest.flush();

  check(cotrans_dataset_write(ds.get(), (out / "data").string().c_str()));
  LogSink log;
  Model model = train_model(cfg.get(), ds.get(), log);
  manifest.phase("train_seconds");

  const fs::path ckpt = out / "best.ckpt";
  const fs::path log_path = out / "train_log.jsonl";
  check(cotrans_model_save(model.get(), ckpt.string().c_str()));
  write_text(log_path, log.lines);
  std::uint32_t best_epoch = 0;
  double best_val = 0.0;
  check(cotrans_model_best_epoch(model.get(), &best_epoch, &best_val));
  manifest.note("best_epoch", best_epoch);
  manifest.note("best_validation_ndcg100", best_val);
  manifest.output(ckpt);
  manifest.output(log_path);
  manifest.finish("ok");
  std::cout << "best epoch " << best_epoch << " validation NDCG@100 " << best_val << "\n"
            << "checkpoint " << ckpt.string() << "\n";
  return 0;
}

std::vector<std::uint32_t> parse_ks(const std::string& spec) {
  std::vector<std::uint32_t> ks;
  std::stringstream in(spec);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
      ks.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--k", "expected comma-separated positive integers: " + spec);
    }
  }
  if (ks.empty()) throw CLI::ValidationError("--k", "no cutoffs given");
  return ks;
}

int cmd_evaluate(const Common& c, DataFlags d, const std::string& checkpoint,
                 const std::string& k_spec, int argc, char** argv) {
  const std::vector<std::uint32_t> ks = parse_ks(k_spec);
  const fs::path ckpt(checkpoint);
  const fs::path out = c.out.empty() ? ckpt.parent_path() : fs::path(c.out);
  if (d.dir.empty() && d.source.empty()) d.dir = (ckpt.parent_path() / "data").string();

  cotrans_model* raw = nullptr;
  check(cotrans_model_load(checkpoint.c_str(), &raw));
  Model model(raw);
  cotrans_config* raw_cfg = nullptr;
  check(cotrans_model_config(model.get(), &raw_cfg));
  Config cfg(raw_cfg);
  if (c.seed) check(cotrans_config_set(cfg.get(), "split_seed", std::to_string(*c.seed).c_str()));

  fs::create_directories(out);
  Manifest manifest(out, "evaluate", argc, argv);
  manifest.input(ckpt);
  manifest.set_config(cfg.get(), config_u64(cfg.get(), "split_seed"));
  Dataset ds = load_data(d, &manifest);
  ensure_split(ds.get(), cfg.get());
  manifest.flush();

  Report report = evaluate(model.get(), ds.get(), ks);
  manifest.phase("evaluate_seconds");
  const std::string metrics = metrics_tsv(report.get(), nullptr);
  char* ranks_raw = nullptr;
  check(cotrans_report_ranks_tsv(report.get(), ds.get(), &ranks_raw));
  const fs::path metrics_path = out / "metrics.tsv";
  const fs::path ranks_path = out / "ranks.tsv";
  write_text(metrics_path, metrics);
  write_text(ranks_path, take(ranks_raw));
  manifest.output(metrics_path);
  manifest.output(ranks_path);
  manifest.finish("ok");
  std::cout << metrics;
  return 0;
}

int cmd_gen_synth(const Common& c, const std::map<std::string, std::string>& shape, int argc,
                  char** argv) {
  Config cfg = resolve_config(c, shape, "synth_seed");
  const fs::path out(c.out);
  fs::create_directories(out);
  Manifest manifest(out, "gen-synth", argc, argv);
  manifest.set_config(cfg.get(), config_u64(cfg.get(), "synth_seed"));
  manifest.flush();

  cotrans_dataset* raw = nullptr;
  check(cotrans_dataset_generate(cfg.get(), &raw));
  Dataset ds(raw);
  check(cotrans_dataset_split(ds.get(), config_u64(cfg.get(), "split_seed")));
  check(cotrans_dataset_write(ds.get(), out.string().c_str()));
  manifest.note("dataset", dataset_json(ds.get()));
  for (const char* f : {"source.tsv", "target.tsv", "kg.tsv", "map_source.tsv", "map_target.tsv",
                        "split.tsv", "source_flags.tsv"}) {
    manifest.output(out / f);
  }
  manifest.finish("ok");
  std::cout << dataset_json(ds.get()).dump() << "\n";
  return 0;
}

int cmd_inject_noise(const Common& c, const DataFlags& d, double ratio, int argc, char** argv) {
  Config cfg = resolve_config(c, {}, "seed");
  const std::uint64_t seed = config_u64(cfg.get(), "seed");
  const fs::path out(c.out);
  fs::create_directories(out);
  Manifest manifest(out, "inject-noise", argc, argv);
  manifest.set_config(cfg.get(), seed);
  manifest.note("ratio", ratio);
  Dataset ds = load_data(d, &manifest);
  manifest.flush();

  cotrans_dataset* raw = nullptr;
  std::size_t added = 0;
  check(cotrans_dataset_inject_noise(ds.get(), ratio, seed, &raw, &added));
  Dataset noisy(raw);
  check(cotrans_dataset_write(noisy.get(), out.string().c_str()));

  // The derived source file carries its provenance as a comment line.
  const fs::path origin = d.dir.empty() ? fs::path(d.source) : fs::path(d.dir) / "source.tsv";
  char* tsv = nullptr;
  check(cotrans_dataset_source_tsv(noisy.get(), &tsv));
  std::ostringstream header;
  header << "# derived from " << origin.string() << " sha256=" << sha256(origin)
         << " ratio=" << fmt(ratio) << " seed=" << seed << " added=" << added << "\n";
  write_text(out / "source.tsv", header.str() + take(tsv));

  cotrans_dataset_stats before{}, after{};
  check(cotrans_dataset_stats_get(ds.get(), &before));
  check(cotrans_dataset_stats_get(noisy.get(), &after));
  manifest.note("edges_before", before.source_edges);
  manifest.note("edges_after", after.source_edges);
  manifest.output(out / "source.tsv");
  manifest.finish("ok");
  std::cout << "source edges " << before.source_edges << " -> " << after.source_edges << " (+"
            << added << ")\n";
  return 0;
}

int cmd_ablate(const Common& c, const DataFlags& d, const TrainFlags& t,
               const std::string& k_spec, int argc, char** argv) {
  const std::vector<std::uint32_t> ks = parse_ks(k_spec);
  Config cfg = resolve_train_config(c, t);
  const std::string variant = config_json(cfg.get()).at("variant").get<std::string>();
  const fs::path out(c.out);
  fs::create_directories(out);
  Manifest manifest(out, "ablate", argc, argv);
  manifest.set_config(cfg.get(), config_u64(cfg.get(), "seed"));
  Dataset ds = load_data(d, &manifest);
  ensure_split(ds.get(), cfg.get());
  manifest.flush();

  LogSink log;
  Model model = train_model(cfg.get(), ds.get(), log);
  manifest.phase("train_seconds");
  Report report = evaluate(model.get(), ds.get(), ks);
  const std::string metrics = metrics_tsv(report.get(), variant.c_str());
  const fs::path metrics_path = out / ("metrics_" + variant + ".tsv");
  const fs::path log_path = out / ("train_log_" + variant + ".jsonl");
  write_text(metrics_path, metrics);
  write_text(log_path, log.lines);
  manifest.output(metrics_path);
  manifest.output(log_path);
  manifest.finish("ok");
  std::cout << metrics;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cotrans: cross-domain recommendation with compressed source transfer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cotrans_version()));

  Common common;
  DataFlags data;
  TrainFlags train_flags;
  std::string checkpoint, k_spec = "10,100";
  double ratio = 0.0;
  std::map<std::string, std::string> shape;
  std::optional<std::uint32_t> users, src_items, tgt_items, latent;
  std::optional<double> rho;

  auto* train = app.add_subcommand("train", "Fit a model and write best.ckpt");
  add_common(train, common, true);
  add_data(train, data);
  add_train_flags(train, train_flags, true);

  auto* eval = app.add_subcommand("evaluate", "Rank held-out test items with a checkpoint");
  add_common(eval, common, false);
  add_data(eval, data);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--k", k_spec, "Comma-separated cutoffs");

  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset with a split");
  add_common(gen, common, true);
  gen->add_option("--users", users);
  gen->add_option("--source-items", src_items);
  gen->add_option("--target-items", tgt_items);
  gen->add_option("--latent-dim", latent);
  gen->add_option("--rho", rho, "Fraction of preference-independent source edges");

  auto* noise = app.add_subcommand("inject-noise", "Add random source-domain edges");
  add_common(noise, common, true);
  add_data(noise, data);
  noise->add_option("--ratio", ratio, "New edges as a fraction of existing ones")->required();

  auto* ablate = app.add_subcommand("ablate", "Train and evaluate one model variant");
  add_common(ablate, common, true);
  add_data(ablate, data);
  add_train_flags(ablate, train_flags, true);
  ablate->add_option("--k", k_spec, "Comma-separated cutoffs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(common, data, train_flags, argc, argv);
    if (*eval) return cmd_evaluate(common, data, checkpoint, k_spec, argc, argv);
    if (*gen) {
      if (users) shape["synth_users"] = std::to_string(*users);
      if (src_items) shape["synth_source_items"] = std::to_string(*src_items);
      if (tgt_items) shape["synth_target_items"] = std::to_string(*tgt_items);
      if (latent) shape["synth_latent_dim"] = std::to_string(*latent);
      if (rho) shape["synth_irrelevant_fraction"] = fmt(*rho);
      return cmd_gen_synth(common, shape, argc, argv);
    }
    if (*noise) return cmd_inject_noise(common, data, ratio, argc, argv);
    if (*ablate) return cmd_ablate(common, data, train_flags, k_spec, argc, argv);
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.status == COTRANS_ERR_IO ? kExitIo : kExitFailure;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
