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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cotrans {

/// Loss weights: source prediction, information bound, contrastive term.
struct Alphas {
  double pred_source = 0.01;
  double kl = 1.0;
  double cl = 1.0;

  friend bool operator==(const Alphas&, const Alphas&) = default;
};

/// Published per-direction settings, keyed as "<source>-><target>" with
/// AM = movies, AB = books, AC = CDs (e.g. "AM->AB").
std::optional<Alphas> alpha_preset(std::string_view direction);

struct LossBundle {
  double pred_target = 0.0;
  double pred_source = 0.0;
  double kl = 0.0;
  double cl = 0.0;
  double total = 0.0;
  Alphas alphas;
};

/// <h_hat + e_target_user, item>
double score(std::span<const double> mixed_user, std::span<const double> target_user,
             std::span<const double> item);

/// Numerically stable log(1 + exp(x)).
double softplus(double x);

/// Mean over pairs of softplus(neg - pos).
double bpr_loss(std::span<const double> pos_scores, std::span<const double> neg_scores);

/// Derivatives of bpr_loss with respect to each positive and negative score.
void bpr_loss_grad(std::span<const double> pos_scores, std::span<const double> neg_scores,
                   std::span<double> grad_pos, std::span<double> grad_neg);

/// Point-wise alternative: mean of softplus(-pos) + softplus(neg).
double bce_loss(std::span<const double> pos_scores, std::span<const double> neg_scores);
void bce_loss_grad(std::span<const double> pos_scores, std::span<const double> neg_scores,
                   std::span<double> grad_pos, std::span<double> grad_neg);

/// Weighted objective. Rejects negative weights.
LossBundle total_loss(double pred_target, double pred_source, double kl, double cl,
                      const Alphas& alphas);

}  // namespace cotrans
