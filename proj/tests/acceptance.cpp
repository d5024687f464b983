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

// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero if any criterion fails.
//
//   cotrans_acceptance [--cli PATH] [--only N[,N...]]
//
// --cli points at the command-line tool for the determinism check; without it
// that criterion runs in-process. COTRANS_AMAZON_DIR names a bundle directory
// (source.tsv = movies, target.tsv = books) for the loader check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cotrans/compression.hpp"
#include "cotrans/config.hpp"
#include "cotrans/encoder.hpp"
#include "cotrans/evaluation.hpp"
#include "cotrans/experiment.hpp"
#include "cotrans/random.hpp"
#include "cotrans/training.hpp"
#include "oracles.hpp"

using namespace cotrans;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  enum { Pass, Fail, Skip } state = Fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Outcome::Pass : Outcome::Fail, std::move(detail)};
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- 1
Outcome gradient_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2026);
  double worst = 0.0;
  std::string worst_at;
  int checked = 0, skipped = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SynthSpec sp;
    sp.users = 6 + static_cast<std::uint32_t>(rng() % 11);  // 6..16
    sp.source_items = 8 + static_cast<std::uint32_t>(rng() % 17);
    sp.target_items = 8 + static_cast<std::uint32_t>(rng() % 17);
    sp.clusters = 2 + static_cast<std::uint32_t>(rng() % 3);
    sp.source_per_user = 4 + static_cast<std::uint32_t>(rng() % 4);
    sp.target_per_user = 4 + static_cast<std::uint32_t>(rng() % 2);
    sp.entity_links_per_item = 1 + static_cast<std::uint32_t>(rng() % 3);
    sp.seed = rng();
    SyntheticData data = generate_synthetic(sp);
    LeaveOneOutSplit split = split_leave_one_out(data.bundle.source, data.bundle.target, rng());

    TrainConfig cfg;
    cfg.embedding_dim = 8;
    cfg.gate_hidden = 4;
    cfg.seed = rng();
    std::uniform_real_distribution<double> weight(0.0, 1.0);
    cfg.alphas = {weight(rng), weight(rng), weight(rng)};
    std::uniform_real_distribution<double> temp(0.2, 1.0);
    const double gumbel_t = temp(rng);

    ModelGraphs graphs = build_graphs(data.bundle.source, split.train_target, data.bundle.kg, cfg);
    const std::uint32_t nodes = std::max(graphs.source.node_count, graphs.target.node_count);
    if (nodes > 100) {
      ++skipped;
      continue;
    }
    ModelParameters params = init_parameters(graphs, cfg);
    RowSampler sampler(data.bundle.source, split.train_target);
    std::vector<TrainingRow> rows = sampler.epoch_rows(cfg.seed, 1);
    rows.resize(std::min<std::size_t>(rows.size(), 16));
    StepDraws draws = draw_step(cfg.seed, 1, 0, rows, cfg.embedding_dim);
    GradientCheckOptions opt;
    opt.temperature = gumbel_t;
    GradientCheckReport r = gradient_check(graphs, params, cfg, rows, draws, opt);
    if (r.non_smooth) {
      ++skipped;
      continue;
    }
    ++checked;
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      worst_at = r.worst;
    }
  }
  const double secs = seconds_since(t0);
  return verdict(checked >= 90 && worst <= 1e-4 && secs < 60.0,
                 fmt("%d instances checked, %d excluded, max rel err %.3g (%s), %.1f s", checked,
                     skipped, worst, worst_at.c_str(), secs));
}

// ---------------------------------------------------------------- 2
Outcome encoder_oracle() {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  int cases = 0;
  for (int g = 0; g < 50; ++g) {
    const auto n = static_cast<std::uint32_t>(2 + rng() % 49);  // 2..50
    std::uniform_real_distribution<double> dens(0.02, 0.5);
    SparseGraph graph = oracle::random_graph(rng, n, dens(rng));
    Matrix e0 = oracle::random_matrix(rng, n, 1 + rng() % 8);
    const Eigen::MatrixXd a = oracle::normalize(oracle::to_dense(graph).cwiseAbs().unaryExpr(
        [](double v) { return v != 0.0 ? 1.0 : 0.0; }));
    const Eigen::MatrixXd x = oracle::to_dense(e0);
    const SparseGraph normalized = normalize_symmetric(graph);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int layers = 0; layers <= 3; ++layers) {
      if (layers > 0) power = a * power;
      Eigen::MatrixXd want = power * x;
      Eigen::MatrixXd got = oracle::to_dense(propagate(normalized, e0, layers).output());
      worst = std::max(worst, (want - got).cwiseAbs().maxCoeff());
      ++cases;
    }
  }
  return verdict(worst <= 1e-10, fmt("%d graph/depth cases, max abs diff %.3g", cases, worst));
}

// ---------------------------------------------------------------- 3
double closed_form_kl(double m1, double s1, double m2, double s2) {
  return std::log(s2 / s1) + (s1 * s1 + (m1 - m2) * (m1 - m2)) / (2.0 * s2 * s2) - 0.5;
}

Outcome kl_relation() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> lam(1e-3, 1.0 - 1e-3), val(-5.0, 5.0), sd(0.05, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double l = lam(rng), h = val(rng), mu = val(rng), sigma = sd(rng);
    Matrix hm(1, 1, h);
    BatchStats stats{{mu}, {sigma}};
    const double bound = l_kl(std::vector<double>{l}, hm, stats, 1e-300).value;
    const double kl = closed_form_kl(l * h + (1 - l) * mu, (1 - l) * sigma, mu, sigma);
    worst = std::max(worst, std::abs(bound - kl - 0.5));
  }
  return verdict(worst <= 1e-10, fmt("1000 draws, max |bound - KL - 0.5| = %.3g", worst));
}

// ---------------------------------------------------------------- 4
Outcome gumbel_frequency() {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> logit(0.0, 2.0);
  CounterStream stream(43, 4);
  std::uint64_t counter = 0;
  double worst = 0.0;
  for (int z = 0; z < 20; ++z) {
    const double l = logit(rng);
    int above = 0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) above += gumbel_sigmoid(l, stream.uniform(counter++), 0.05) > 0.5;
    worst = std::max(worst, std::abs(above / static_cast<double>(draws) - sigmoid(l)));
  }
  return verdict(worst <= 0.01, fmt("20 logits x 1e5 draws at t=0.05, max deviation %.4f", worst));
}

// ---------------------------------------------------------------- 5
Outcome metric_identities() {
  std::mt19937_64 rng(59);
  std::uniform_int_distribution<int> coarse(0, 30);
  int mismatches = 0;
  for (int v = 0; v < 1000; ++v) {
    const auto n = static_cast<std::uint32_t>(150 + rng() % 200);
    std::vector<double> scores(n);
    std::normal_distribution<double> normal;
    for (double& s : scores) s = v % 3 == 0 ? coarse(rng) : normal(rng);
    const auto held = static_cast<std::uint32_t>(rng() % n);
    std::set<std::uint32_t> train;
    for (int k = 0; k < 10; ++k) {
      auto i = static_cast<std::uint32_t>(rng() % n);
      if (i != held) train.insert(i);
    }
    // Oracle metrics straight from the sorted list.
    const std::uint32_t want = oracle::brute_rank(scores, held, train);
    std::vector<std::uint32_t> sorted(train.begin(), train.end());
    const std::uint32_t got = rank_of(scores, held, sorted);
    for (std::uint32_t k : {10U, 100U}) {
      const bool in = want <= k;
      mismatches += metric_at(Metric::Ndcg, k, got) != (in ? 1.0 / std::log2(want + 1.0) : 0.0);
      mismatches += metric_at(Metric::Hit, k, got) != (in ? 1.0 : 0.0);
      mismatches += metric_at(Metric::Mrr, k, got) != (in ? 1.0 / want : 0.0);
    }
  }
  return verdict(mismatches == 0, fmt("1000 score vectors, %d mismatches", mismatches));
}

// ---------------------------------------------------------------- 6, 7
// Shared training setup for the synthetic end-to-end checks. The loss
// weights were picked by grid search on validation NDCG@100 of a separate
// tuning dataset (seed 1000) and are frozen here for every variant.
RunConfig synthetic_config() {
  RunConfig rc;  // 500 users, 300 + 300 items, k = 8, rho = 0.3
  rc.train.learning_rate = 0.1;
  rc.train.batch_size = 512;
  rc.train.max_epochs = 150;
  rc.train.patience = 15;
  rc.train.alphas = {1.0, 0.001, 0.001};
  return rc;
}

constexpr int kSeeds = 5;

struct SeedData {
  DatasetBundle bundle;
  TrainConfig train;
};

SeedData seed_data(int s) {
  RunConfig rc = synthetic_config();
  rc.synth.seed = static_cast<std::uint64_t>(s + 1);
  SeedData d;
  d.bundle = generate_synthetic(rc.synth).bundle;
  d.bundle.split = split_leave_one_out(d.bundle.source, d.bundle.target, rc.split_seed + s);
  d.train = rc.train;
  d.train.seed = rc.train.seed + static_cast<std::uint64_t>(s);
  return d;
}

double ndcg10(Variant v, const SeedData& d, double* seconds = nullptr) {
  const auto t0 = Clock::now();
  const std::uint32_t k[] = {10};
  double value = run_ablation(v, d.train, d.bundle, k).test.at(Metric::Ndcg, 10);
  if (seconds) *seconds = seconds_since(t0);
  return value;
}

struct EndToEnd {
  std::vector<double> full, target_only, no_kl;
  double slowest = 0.0;
};

EndToEnd run_end_to_end() {
  EndToEnd e;
  for (int s = 0; s < kSeeds; ++s) {
    SeedData d = seed_data(s);
    double t = 0.0;
    e.full.push_back(ndcg10(Variant::Full, d, &t));
    e.slowest = std::max(e.slowest, t);
    e.target_only.push_back(ndcg10(Variant::TargetOnly, d, &t));
    e.slowest = std::max(e.slowest, t);
    e.no_kl.push_back(ndcg10(Variant::NoKl, d, &t));
    e.slowest = std::max(e.slowest, t);
    std::printf("  seed %d: NDCG@10 full %.4f  target-only %.4f  no-kl %.4f\n", s + 1,
                e.full.back(), e.target_only.back(), e.no_kl.back());
    std::fflush(stdout);
  }
  return e;
}

Outcome end_to_end_gain(const EndToEnd& e) {
  const double f = median(e.full), t = median(e.target_only), k = median(e.no_kl);
  return verdict(f > t && f > k && e.slowest < 300.0,
                 fmt("median NDCG@10 full %.4f, target-only %.4f, no-kl %.4f; slowest run %.1f s",
                     f, t, k, e.slowest));
}

Outcome robustness(const EndToEnd& e) {
  const double ratios[] = {0.05, 0.10, 0.15, 0.20};
  std::vector<double> full_drop, nokl_drop;
  for (int s = 0; s < kSeeds; ++s) {
    SeedData d = seed_data(s);
    const std::uint64_t noise_seed = 500 + static_cast<std::uint64_t>(s);
    auto curve = [&](Variant v) {
      return robustness_curve(v, d.train, d.bundle, ratios, noise_seed);
    };
    auto full = curve(Variant::Full);
    auto nokl = curve(Variant::NoKl);
    std::printf("  seed %d:", s + 1);
    for (std::size_t r = 0; r < full.size(); ++r) {
      std::printf("  %.2f: full %.4f no-kl %.4f", full[r].ratio, full[r].ndcg10, nokl[r].ndcg10);
    }
    std::printf("\n");
    std::fflush(stdout);
    full_drop.push_back(relative_degradation(e.full[s], full.back().ndcg10));
    nokl_drop.push_back(relative_degradation(e.no_kl[s], nokl.back().ndcg10));
  }
  const double f = median(full_drop), k = median(nokl_drop);
  return verdict(f <= k, fmt("median relative NDCG@10 drop at ratio 0.20: full %.4f, no-kl %.4f",
                             f, k));
}

// ---------------------------------------------------------------- 8
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / "cotrans_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string a, b;
  if (!cli.empty()) {
    const std::string data = (dir / "data").string();
    auto run = [&](const std::string& args) {
      const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
      return std::system(cmd.c_str()) == 0;
    };
    const std::string train =
        " --data " + data + " --seed 7 --epochs 5 --lr 0.1 --batch-size 512 --out ";
    if (!run("gen-synth --seed 3 --out " + data) || !run("train" + train + (dir / "a").string()) ||
        !run("train" + train + (dir / "b").string())) {
      fs::remove_all(dir);
      return verdict(false, "command-line run failed");
    }
    a = slurp(dir / "a" / "best.ckpt");
    b = slurp(dir / "b" / "best.ckpt");
  } else {
    SeedData d = seed_data(2);
    d.train.max_epochs = 5;
    for (const char* name : {"a.ckpt", "b.ckpt"}) {
      save_checkpoint(dir / name, fit(d.bundle, d.train).best, d.train);
    }
    a = slurp(dir / "a.ckpt");
    b = slurp(dir / "b.ckpt");
  }
  fs::remove_all(dir);
  return verdict(!a.empty() && a == b,
                 fmt("%s: two runs, %zu and %zu byte checkpoints, %s", cli.empty() ? "in-process" : "cli",
                     a.size(), b.size(), a == b ? "identical" : "different"));
}

// ---------------------------------------------------------------- 9
Outcome loader_sanity() {
  const char* dir = std::getenv("COTRANS_AMAZON_DIR");
  if (!dir || !*dir || !fs::exists(fs::path(dir) / "source.tsv")) {
    return {Outcome::Skip, "COTRANS_AMAZON_DIR not set or missing source.tsv"};
  }
  DatasetBundle b = load_bundle_dir(dir);
  const auto users = b.users.size();
  const auto movies = b.source.item_count, books = b.target.item_count;
  return verdict(users == 11240 && movies == 16100 && books == 47377,
                 fmt("%zu users, %u movie items, %u book items", static_cast<std::size_t>(users),
                     movies, books));
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: %s [--cli PATH] [--only N[,N...]]\n", argv[0]);
      return 64;
    }
  }
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  int failures = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    const char* tag = o.state == Outcome::Pass ? "PASS" : o.state == Outcome::Skip ? "SKIP" : "FAIL";
    failures += o.state == Outcome::Fail;
    std::printf("[%s] %d %s: %s\n", tag, n, name, o.detail.c_str());
    std::fflush(stdout);
  };
  auto guarded = [&](int n, const char* name, auto&& check) {
    if (!wanted(n)) return;
    try {
      report(n, name, check());
    } catch (const std::exception& e) {
      report(n, name, verdict(false, std::string("error: ") + e.what()));
    }
  };

  guarded(1, "gradient exactness", gradient_exactness);
  guarded(2, "encoder oracle equivalence", encoder_oracle);
  guarded(3, "KL bound relation", kl_relation);
  guarded(4, "gumbel-sigmoid frequency", gumbel_frequency);
  guarded(5, "metric identities", metric_identities);
  if (wanted(6) || wanted(7)) {
    try {
      EndToEnd e = run_end_to_end();
      guarded(6, "synthetic end-to-end gain", [&] { return end_to_end_gain(e); });
      guarded(7, "robustness ordering", [&] { return robustness(e); });
    } catch (const std::exception& ex) {
      guarded(6, "synthetic end-to-end gain", [&] { return verdict(false, ex.what()); });
      guarded(7, "robustness ordering", [&] { return verdict(false, ex.what()); });
    }
  }
  guarded(8, "determinism", [&] { return determinism(cli); });
  guarded(9, "loader sanity", loader_sanity);
  return failures == 0 ? 0 : 1;
}
