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

#include <span>
#include <vector>

#include "cotrans/matrix.hpp"

namespace cotrans {

// Target-conditioned compression of source behaviour. The merged user
// representation H is passed through a per-user reliability gate; unreliable
// users are pushed toward Gaussian noise drawn from the batch statistics of H.

struct CompressionFloors {
  double sigma = 1e-4;  // per-dimension batch std
  double m = 1e-6;      // sum of squared closed gates inside the log
  double norm = 1e-12;  // vector norms in cosine similarity
};

/// H = E^S + E^T, row-wise over a batch of users.
Matrix merge_representations(const Matrix& source_users, const Matrix& target_users);

double sigmoid(double x);

/// Binary-Concrete relaxation: sigmoid((z + log(m / (1 - m))) / t).
/// Throws when t <= 0 or m is outside (0, 1).
double gumbel_sigmoid(double logit, double uniform, double temperature);

/// d lambda / d logit for a relaxed gate value.
inline double gumbel_sigmoid_slope(double lambda, double temperature) {
  return lambda * (1.0 - lambda) / temperature;
}

/// Per-dimension mean and population standard deviation of a batch. These are
/// constants with respect to gradients.
struct BatchStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

BatchStats batch_statistics(const Matrix& h, double sigma_floor);

struct MixedRepresentation {
  Matrix noise;  // epsilon = mean + stddev * draw
  Matrix mixed;  // lambda * H + (1 - lambda) * epsilon
};

MixedRepresentation mix_noise(const Matrix& h, std::span<const double> lambda,
                              const BatchStats& stats, const Matrix& standard_normal_draws);

/// Inference-time mixing: the gate is replaced by its expectation and the
/// noise by its mean.
Matrix mix_expected(const Matrix& h, std::span<const double> gate_probability,
                    const BatchStats& stats);

struct KlBound {
  double value = 0.0;
  bool m_floored = false;
  std::vector<double> grad_lambda;  // filled when requested
  Matrix grad_h;
};

/// Upper bound on the information kept from the input, averaged over
/// embedding dimensions:
///   -1/2 log M + M / (2B) + Q_k^2 / (2B)
/// with M = sum_j (1 - lambda_j)^2 and Q_k = sum_j lambda_j (H_jk - mu_k) / sigma_k.
KlBound l_kl(std::span<const double> lambda, const Matrix& h, const BatchStats& stats,
             double m_floor, bool with_grad = false);

struct ContrastiveLoss {
  double value = 0.0;
  double min_norm = 0.0;  // smallest vector norm seen; floors apply below norm floor
  Matrix grad_target;     // filled when requested
  Matrix grad_mixed;
};

/// InfoNCE over in-batch negatives with cosine similarity. Row i of `mixed`
/// is the anchor; row i of `target_users` is its positive and every other
/// row of `target_users` a negative.
ContrastiveLoss l_cl(const Matrix& target_users, const Matrix& mixed, double tau,
                     double norm_floor = 1e-12, bool with_grad = false);

/// One hidden tanh layer followed by a scalar linear output (the gate logit).
struct GateWeights {
  const Matrix& w1;  // d x h
  const Matrix& b1;  // 1 x h
  const Matrix& w2;  // h x 1
  const Matrix& b2;  // 1 x 1
};

struct GateGrads {
  Matrix& w1;
  Matrix& b1;
  Matrix& w2;
  Matrix& b2;
};

struct GateActivations {
  Matrix hidden;  // B x h, after tanh
  std::vector<double> logits;
};

GateActivations gate_forward(const Matrix& h, const GateWeights& gate);

/// Accumulates weight gradients into `grads` and input gradients into `grad_h`.
void gate_backward(const Matrix& h, const GateWeights& gate, const GateActivations& acts,
                   std::span<const double> grad_logits, GateGrads grads, Matrix& grad_h);

}  // namespace cotrans
