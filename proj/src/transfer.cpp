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

#include "cotrans/transfer.hpp"

#include <cmath>

#include "cotrans/compression.hpp"
#include "cotrans/error.hpp"

namespace cotrans {

std::optional<Alphas> alpha_preset(std::string_view direction) {
  struct Row {
    std::string_view key;
    Alphas alphas;
  };
  static constexpr Row kPresets[] = {
      {"AM->AB", {0.01, 1.0, 1.0}},  {"AB->AM", {0.01, 0.01, 0.1}},
      {"AM->AC", {0.001, 1.0, 5.0}}, {"AC->AM", {0.01, 1.0, 5.0}},
      {"AB->AC", {0.1, 1.0, 1.0}},   {"AC->AB", {0.1, 1.0, 1.0}},
  };
  for (const auto& row : kPresets) {
    if (row.key == direction) return row.alphas;
  }
  return std::nullopt;
}

double score(std::span<const double> mixed_user, std::span<const double> target_user,
             std::span<const double> item) {
  require(mixed_user.size() == item.size() && target_user.size() == item.size(),
          "score: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < item.size(); ++k) s += (mixed_user[k] + target_user[k]) * item[k];
  return s;
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double bpr_loss(std::span<const double> pos_scores, std::span<const double> neg_scores) {
  require(pos_scores.size() == neg_scores.size(), "bpr_loss: length mismatch");
  if (pos_scores.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < pos_scores.size(); ++r) s += softplus(neg_scores[r] - pos_scores[r]);
  return s / static_cast<double>(pos_scores.size());
}

void bpr_loss_grad(std::span<const double> pos_scores, std::span<const double> neg_scores,
                   std::span<double> grad_pos, std::span<double> grad_neg) {
  const double n = static_cast<double>(pos_scores.size());
  for (std::size_t r = 0; r < pos_scores.size(); ++r) {
    double g = sigmoid(neg_scores[r] - pos_scores[r]) / n;
    grad_pos[r] = -g;
    grad_neg[r] = g;
  }
}

double bce_loss(std::span<const double> pos_scores, std::span<const double> neg_scores) {
  require(pos_scores.size() == neg_scores.size(), "bce_loss: length mismatch");
  if (pos_scores.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < pos_scores.size(); ++r) {
    s += softplus(-pos_scores[r]) + softplus(neg_scores[r]);
  }
  return s / static_cast<double>(pos_scores.size());
}

void bce_loss_grad(std::span<const double> pos_scores, std::span<const double> neg_scores,
                   std::span<double> grad_pos, std::span<double> grad_neg) {
  const double n = static_cast<double>(pos_scores.size());
  for (std::size_t r = 0; r < pos_scores.size(); ++r) {
    grad_pos[r] = -sigmoid(-pos_scores[r]) / n;
    grad_neg[r] = sigmoid(neg_scores[r]) / n;
  }
}

LossBundle total_loss(double pred_target, double pred_source, double kl, double cl,
                      const Alphas& alphas) {
  require(alphas.pred_source >= 0.0 && alphas.kl >= 0.0 && alphas.cl >= 0.0,
          "total_loss: loss weights must be non-negative");
  LossBundle b;
  b.pred_target = pred_target;
  b.pred_source = pred_source;
  b.kl = kl;
  b.cl = cl;
  b.alphas = alphas;
  b.total = pred_target + alphas.pred_source * pred_source + alphas.kl * kl + alphas.cl * cl;
  return b;
}

}  // namespace cotrans
