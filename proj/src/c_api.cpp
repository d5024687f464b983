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

#include "cotrans/cotrans.h"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cotrans/config.hpp"
#include "cotrans/error.hpp"
#include "cotrans/evaluation.hpp"
#include "cotrans/experiment.hpp"
#include "cotrans/training.hpp"

struct cotrans_config {
  cotrans::RunConfig value;
};

struct cotrans_dataset {
  cotrans::DatasetBundle bundle;
  std::optional<std::vector<bool>> source_relevant;  // synthetic only
};

struct cotrans_model {
  cotrans::ModelParameters params;
  cotrans::TrainConfig config;
  std::uint32_t best_epoch = 0;
  double best_validation = 0.0;
};

struct cotrans_report {
  cotrans::EvaluationReport report;
};

namespace {

thread_local std::string g_last_error;

cotrans_status status_of(cotrans::ErrorKind kind) {
  switch (kind) {
    case cotrans::ErrorKind::InvalidArgument:
      return COTRANS_ERR_INVALID_ARGUMENT;
    case cotrans::ErrorKind::Io:
      return COTRANS_ERR_IO;
    case cotrans::ErrorKind::Parse:
      return COTRANS_ERR_PARSE;
    case cotrans::ErrorKind::Numeric:
      return COTRANS_ERR_NUMERIC;
  }
  return COTRANS_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
cotrans_status guarded(F&& body) {
  try {
    body();
    return COTRANS_OK;
  } catch (const cotrans::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return COTRANS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return COTRANS_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) cotrans::fail(cotrans::ErrorKind::InvalidArgument, std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::filesystem::path optional_path(const char* p) {
  return p == nullptr ? std::filesystem::path{} : std::filesystem::path(p);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) cotrans::fail(cotrans::ErrorKind::Io, "no such file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parameter shapes implied by the dataset must match the stored model.
void check_compatible(const cotrans::ModelGraphs& graphs, const cotrans_model& m) {
  cotrans::ModelParameters expected = cotrans::init_parameters(graphs, m.config);
  for (std::size_t t = 0; t < cotrans::kParamCount; ++t) {
    if (!expected.tensors[t].same_shape(m.params.tensors[t])) {
      cotrans::fail(cotrans::ErrorKind::InvalidArgument,
                    "model does not match dataset: tensor " +
                        std::string(cotrans::param_name(static_cast<cotrans::Param>(t))) +
                        " has shape " + std::to_string(m.params.tensors[t].rows()) + "x" +
                        std::to_string(m.params.tensors[t].cols()) + ", dataset needs " +
                        std::to_string(expected.tensors[t].rows()) + "x" +
                        std::to_string(expected.tensors[t].cols()));
    }
  }
}

}  // namespace

extern "C" {

const char* cotrans_version(void) { return "1.0.0"; }

const char* cotrans_last_error(void) { return g_last_error.c_str(); }

void cotrans_string_free(char* s) { std::free(s); }

cotrans_status cotrans_config_new(cotrans_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cotrans_config{};
  });
}

cotrans_status cotrans_config_clone(const cotrans_config* config, cotrans_config** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = new cotrans_config{*config};
  });
}

void cotrans_config_free(cotrans_config* config) { delete config; }

cotrans_status cotrans_config_set(cotrans_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    cotrans::RunConfig updated = config->value;
    cotrans::apply_config_entry(updated, key, value);
    config->value = updated;
  });
}

cotrans_status cotrans_config_load_file(cotrans_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    const std::string text = read_file(path);
    cotrans::RunConfig updated = config->value;
    try {
      for (const auto& [k, v] : cotrans::parse_config_text(text)) {
        cotrans::apply_config_entry(updated, k, v);
      }
    } catch (const cotrans::Error& e) {
      cotrans::fail(e.kind(), std::string(path) + ": " + e.what());
    }
    config->value = updated;
  });
}

cotrans_status cotrans_config_to_text(const cotrans_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = dup_string(cotrans::config_to_text(config->value));
  });
}

cotrans_status cotrans_dataset_load(const char* source, const char* target, const char* kg,
                                    const char* map_source, const char* map_target,
                                    cotrans_dataset** out) {
  return guarded([&] {
    need(source, "source");
    need(target, "target");
    need(out, "out");
    cotrans::BundlePaths paths;
    paths.source = source;
    paths.target = target;
    paths.kg = optional_path(kg);
    paths.map_source = optional_path(map_source);
    paths.map_target = optional_path(map_target);
    *out = new cotrans_dataset{cotrans::load_bundle(paths), std::nullopt};
  });
}

cotrans_status cotrans_dataset_load_dir(const char* dir, cotrans_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new cotrans_dataset{cotrans::load_bundle_dir(dir), std::nullopt};
  });
}

cotrans_status cotrans_dataset_generate(const cotrans_config* config, cotrans_dataset** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    cotrans::SyntheticData data = cotrans::generate_synthetic(config->value.synth);
    *out = new cotrans_dataset{std::move(data.bundle), std::move(data.source_relevant)};
  });
}

void cotrans_dataset_free(cotrans_dataset* dataset) { delete dataset; }

cotrans_status cotrans_dataset_split(cotrans_dataset* dataset, uint64_t seed) {
  return guarded([&] {
    need(dataset, "dataset");
    dataset->bundle.split =
        cotrans::split_leave_one_out(dataset->bundle.source, dataset->bundle.target, seed);
  });
}

cotrans_status cotrans_dataset_inject_noise(const cotrans_dataset* dataset, double ratio,
                                            uint64_t seed, cotrans_dataset** out,
                                            size_t* added_edges) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out, "out");
    std::vector<cotrans::Edge> added;
    auto* noisy = new cotrans_dataset{dataset->bundle, std::nullopt};
    try {
      noisy->bundle.source =
          cotrans::inject_source_noise(dataset->bundle.source, ratio, seed, &added);
    } catch (...) {
      delete noisy;
      throw;
    }
    if (added_edges != nullptr) *added_edges = added.size();
    *out = noisy;
  });
}

cotrans_status cotrans_dataset_stats_get(const cotrans_dataset* dataset,
                                         cotrans_dataset_stats* out) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out, "out");
    const cotrans::DatasetBundle& b = dataset->bundle;
    cotrans_dataset_stats s{};
    s.users = b.users.size();
    s.source_items = b.source.item_count;
    s.target_items = b.target.item_count;
    s.entities = b.kg.entity_count;
    s.source_edges = b.source.edges.size();
    s.target_edges = b.target.edges.size();
    s.entity_edges = b.kg.entity_edges.size();
    s.duplicate_edges = b.report.duplicate_edges;
    s.dropped_users = b.report.dropped_users;
    s.malformed_lines = b.report.malformed.size();
    s.has_split = b.split.has_value() ? 1 : 0;
    if (b.split) {
      s.evaluated_users = b.split->test.size();
      s.excluded_users = b.split->excluded_users;
    }
    *out = s;
  });
}

cotrans_status cotrans_dataset_write(const cotrans_dataset* dataset, const char* dir) {
  return guarded([&] {
    need(dataset, "dataset");
    need(dir, "dir");
    cotrans::write_bundle(dataset->bundle, dir);
    if (dataset->source_relevant) {
      cotrans::SyntheticData view{dataset->bundle, *dataset->source_relevant};
      cotrans::write_file_atomic(std::filesystem::path(dir) / "source_flags.tsv",
                                 cotrans::write_flags_tsv(view));
    }
  });
}

cotrans_status cotrans_dataset_source_tsv(const cotrans_dataset* dataset, char** out) {
  return guarded([&] {
    need(dataset, "dataset");
    need(out, "out");
    const cotrans::DatasetBundle& b = dataset->bundle;
    *out = dup_string(cotrans::write_interactions_tsv(b.source, b.users, b.source_items));
  });
}

cotrans_status cotrans_train(const cotrans_config* config, const cotrans_dataset* dataset,
                             cotrans_epoch_callback on_epoch, void* user_data,
                             cotrans_model** out) {
  return guarded([&] {
    need(config, "config");
    need(dataset, "dataset");
    need(out, "out");
    std::function<void(const cotrans::EpochRecord&)> hook;
    if (on_epoch != nullptr) {
      hook = [&](const cotrans::EpochRecord& r) {
        on_epoch(cotrans::format_epoch_record(r).c_str(), user_data);
      };
    }
    cotrans::FitResult result = cotrans::fit(dataset->bundle, config->value.train, hook);
    *out = new cotrans_model{std::move(result.best), config->value.train, result.best_epoch,
                             result.best_validation};
  });
}

void cotrans_model_free(cotrans_model* model) { delete model; }

cotrans_status cotrans_model_save(const cotrans_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    cotrans::save_checkpoint(path, model->params, model->config);
  });
}

cotrans_status cotrans_model_load(const char* path, cotrans_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    cotrans::Checkpoint ck = cotrans::load_checkpoint(path);
    *out = new cotrans_model{std::move(ck.params), ck.config, 0, 0.0};
  });
}

cotrans_status cotrans_model_config(const cotrans_model* model, cotrans_config** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    auto* c = new cotrans_config{};
    c->value.train = model->config;
    *out = c;
  });
}

cotrans_status cotrans_model_best_epoch(const cotrans_model* model, uint32_t* epoch,
                                        double* validation) {
  return guarded([&] {
    need(model, "model");
    if (epoch != nullptr) *epoch = model->best_epoch;
    if (validation != nullptr) *validation = model->best_validation;
  });
}

cotrans_status cotrans_evaluate(const cotrans_model* model, const cotrans_dataset* dataset,
                                const uint32_t* ks, size_t k_count, cotrans_report** out) {
  return guarded([&] {
    need(model, "model");
    need(dataset, "dataset");
    need(out, "out");
    if (k_count > 0) need(ks, "ks");
    const cotrans::DatasetBundle& b = dataset->bundle;
    cotrans::require(b.split.has_value(), "evaluate: dataset has no leave-one-out split");
    cotrans::ModelGraphs graphs =
        cotrans::build_graphs(b.source, b.split->train_target, b.kg, model->config);
    check_compatible(graphs, *model);
    cotrans::ScoringModel scoring = cotrans::build_scoring(graphs, model->params, model->config);
    *out = new cotrans_report{cotrans::evaluate_ranking(
        scoring, b.split->test, b.split->train_target, std::span<const uint32_t>(ks, k_count))};
  });
}

void cotrans_report_free(cotrans_report* report) { delete report; }

cotrans_status cotrans_report_value(const cotrans_report* report, cotrans_metric metric,
                                    uint32_t k, double* out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    cotrans::Metric m;
    switch (metric) {
      case COTRANS_METRIC_NDCG:
        m = cotrans::Metric::Ndcg;
        break;
      case COTRANS_METRIC_HIT:
        m = cotrans::Metric::Hit;
        break;
      case COTRANS_METRIC_MRR:
        m = cotrans::Metric::Mrr;
        break;
      default:
        cotrans::fail(cotrans::ErrorKind::InvalidArgument, "unknown metric");
    }
    *out = report->report.at(m, k);
  });
}

cotrans_status cotrans_report_metrics_tsv(const cotrans_report* report, const char* variant,
                                          char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(
        cotrans::format_metrics_tsv(report->report, variant == nullptr ? "" : variant));
  });
}

cotrans_status cotrans_report_ranks_tsv(const cotrans_report* report,
                                        const cotrans_dataset* dataset, char** out) {
  return guarded([&] {
    need(report, "report");
    need(dataset, "dataset");
    need(out, "out");
    *out = dup_string(cotrans::format_ranks_tsv(report->report, dataset->bundle));
  });
}

cotrans_status cotrans_write_file(const char* path, const char* data, size_t size) {
  return guarded([&] {
    need(path, "path");
    if (size > 0) need(data, "data");
    cotrans::write_file_atomic(path, std::string_view(data == nullptr ? "" : data, size));
  });
}

cotrans_status cotrans_file_sha256(const char* path, char out[65]) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const std::string bytes = read_file(path);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
      cotrans::fail(cotrans::ErrorKind::Io, "sha256 failed for " + std::string(path));
    }
    for (unsigned int i = 0; i < len; ++i) std::snprintf(out + 2 * i, 3, "%02x", digest[i]);
    out[2 * len] = '\0';
  });
}

}  // extern "C"
