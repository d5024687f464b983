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

#include "cotrans/compression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cotrans/error.hpp"

namespace cotrans {

Matrix merge_representations(const Matrix& source_users, const Matrix& target_users) {
  require(source_users.same_shape(target_users), "merge_representations: shape mismatch");
  Matrix h = source_users;
  auto dst = h.values();
  auto src = target_users.values();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  return h;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double gumbel_sigmoid(double logit, double uniform, double temperature) {
  require(temperature > 0.0, "gumbel_sigmoid: temperature must be positive");
  require(uniform > 0.0 && uniform < 1.0, "gumbel_sigmoid: uniform draw must lie in (0, 1)");
  double logistic = std::log(uniform) - std::log1p(-uniform);
  return sigmoid((logit + logistic) / temperature);
}

BatchStats batch_statistics(const Matrix& h, double sigma_floor) {
  require(h.rows() > 0, "batch_statistics: empty batch");
  const std::size_t b = h.rows();
  const std::size_t d = h.cols();
  BatchStats s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (std::size_t r = 0; r < b; ++r) axpy(1.0, h.row(r), s.mean);
  for (double& m : s.mean) m /= static_cast<double>(b);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t k = 0; k < d; ++k) {
      double c = h(r, k) - s.mean[k];
      s.stddev[k] += c * c;
    }
  }
  for (double& v : s.stddev) v = std::max(std::sqrt(v / static_cast<double>(b)), sigma_floor);
  return s;
}

MixedRepresentation mix_noise(const Matrix& h, std::span<const double> lambda,
                              const BatchStats& stats, const Matrix& standard_normal_draws) {
  require(h.same_shape(standard_normal_draws) && lambda.size() == h.rows() &&
              stats.mean.size() == h.cols() && stats.stddev.size() == h.cols(),
          "mix_noise: shape mismatch");
  MixedRepresentation out{Matrix(h.rows(), h.cols()), Matrix(h.rows(), h.cols())};
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const double g = lambda[r];
    for (std::size_t k = 0; k < h.cols(); ++k) {
      double eps = stats.mean[k] + stats.stddev[k] * standard_normal_draws(r, k);
      out.noise(r, k) = eps;
      out.mixed(r, k) = g * h(r, k) + (1.0 - g) * eps;
    }
  }
  return out;
}

Matrix mix_expected(const Matrix& h, std::span<const double> gate_probability,
                    const BatchStats& stats) {
  require(gate_probability.size() == h.rows() && stats.mean.size() == h.cols(),
          "mix_expected: shape mismatch");
  Matrix out(h.rows(), h.cols());
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const double g = gate_probability[r];
    for (std::size_t k = 0; k < h.cols(); ++k) {
      out(r, k) = g * h(r, k) + (1.0 - g) * stats.mean[k];
    }
  }
  return out;
}

KlBound l_kl(std::span<const double> lambda, const Matrix& h, const BatchStats& stats,
             double m_floor, bool with_grad) {
  const std::size_t b = h.rows();
  const std::size_t d = h.cols();
  require(b >= 1 && lambda.size() == b, "l_kl: gate count must equal batch size");
  require(stats.mean.size() == d && stats.stddev.size() == d, "l_kl: statistics shape mismatch");
  const double bd = static_cast<double>(b);

  double m = 0.0;
  for (double g : lambda) m += (1.0 - g) * (1.0 - g);
  std::vector<double> q(d, 0.0);
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      q[k] += lambda[j] * (h(j, k) - stats.mean[k]) / stats.stddev[k];
    }
  }

  KlBound out;
  out.m_floored = m < m_floor;
  const double m_used = std::max(m, m_floor);
  double q_term = 0.0;
  for (double qk : q) q_term += qk * qk;
  q_term /= static_cast<double>(d);
  out.value = -0.5 * std::log(m_used) + m / (2.0 * bd) + q_term / (2.0 * bd);

  if (!with_grad) return out;

  // dL/dM is shared by every gate; the log term is constant once floored.
  const double dl_dm = (out.m_floored ? 0.0 : -0.5 / m) + 1.0 / (2.0 * bd);
  out.grad_lambda.assign(b, 0.0);
  out.grad_h = Matrix(b, d);
  const double scale = 1.0 / (bd * static_cast<double>(d));
  for (std::size_t j = 0; j < b; ++j) {
    double g = dl_dm * (-2.0 * (1.0 - lambda[j]));
    for (std::size_t k = 0; k < d; ++k) {
      double centered = (h(j, k) - stats.mean[k]) / stats.stddev[k];
      g += scale * q[k] * centered;
      out.grad_h(j, k) = scale * q[k] * lambda[j] / stats.stddev[k];
    }
    out.grad_lambda[j] = g;
  }
  return out;
}

ContrastiveLoss l_cl(const Matrix& target_users, const Matrix& mixed, double tau,
                     double norm_floor, bool with_grad) {
  require(tau > 0.0, "l_cl: temperature must be positive");
  require(target_users.same_shape(mixed) && mixed.rows() >= 1, "l_cl: shape mismatch");
  const std::size_t b = mixed.rows();
  const std::size_t d = mixed.cols();

  std::vector<double> raw_t(b), raw_h(b), nt(b), nh(b);
  ContrastiveLoss out;
  out.min_norm = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < b; ++r) {
    raw_t[r] = std::sqrt(dot(target_users.row(r), target_users.row(r)));
    raw_h[r] = std::sqrt(dot(mixed.row(r), mixed.row(r)));
    nt[r] = std::max(raw_t[r], norm_floor);
    nh[r] = std::max(raw_h[r], norm_floor);
    out.min_norm = std::min({out.min_norm, raw_t[r], raw_h[r]});
  }

  // sim(j, i): cosine between target row j and anchor i.
  Matrix sim(b, b);
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t i = 0; i < b; ++i) {
      sim(j, i) = dot(target_users.row(j), mixed.row(i)) / (nt[j] * nh[i]);
    }
  }

  Matrix dsim;
  if (with_grad) dsim = Matrix(b, b);
  double total = 0.0;
  std::vector<double> logits(b);
  for (std::size_t i = 0; i < b; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b; ++j) {
      logits[j] = sim(j, i) / tau;
      peak = std::max(peak, logits[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < b; ++j) z += std::exp(logits[j] - peak);
    double lse = peak + std::log(z);
    total += lse - logits[i];
    if (with_grad) {
      for (std::size_t j = 0; j < b; ++j) {
        double p = std::exp(logits[j] - lse);
        dsim(j, i) = (p - (i == j ? 1.0 : 0.0)) / (tau * static_cast<double>(b));
      }
    }
  }
  out.value = total / static_cast<double>(b);
  if (!with_grad) return out;

  out.grad_target = Matrix(b, d);
  out.grad_mixed = Matrix(b, d);
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t i = 0; i < b; ++i) {
      const double g = dsim(j, i);
      if (g == 0.0) continue;
      auto t = target_users.row(j);
      auto hv = mixed.row(i);
      const double inv = 1.0 / (nt[j] * nh[i]);
      // Norm derivatives vanish where the floor is active.
      const double ct = raw_t[j] > norm_floor ? sim(j, i) / (raw_t[j] * nt[j]) : 0.0;
      const double ch = raw_h[i] > norm_floor ? sim(j, i) / (raw_h[i] * nh[i]) : 0.0;
      auto gt = out.grad_target.row(j);
      auto gh = out.grad_mixed.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        gt[k] += g * (hv[k] * inv - ct * t[k]);
        gh[k] += g * (t[k] * inv - ch * hv[k]);
      }
    }
  }
  return out;
}

GateActivations gate_forward(const Matrix& h, const GateWeights& gate) {
  require(gate.w1.rows() == h.cols(), "gate_forward: input width does not match gate");
  const std::size_t hidden = gate.w1.cols();
  GateActivations acts{Matrix(h.rows(), hidden), std::vector<double>(h.rows())};
  for (std::size_t r = 0; r < h.rows(); ++r) {
    auto a = acts.hidden.row(r);
    for (std::size_t c = 0; c < hidden; ++c) a[c] = gate.b1(0, c);
    for (std::size_t k = 0; k < h.cols(); ++k) axpy(h(r, k), gate.w1.row(k), a);
    double z = gate.b2(0, 0);
    for (std::size_t c = 0; c < hidden; ++c) {
      a[c] = std::tanh(a[c]);
      z += a[c] * gate.w2(c, 0);
    }
    acts.logits[r] = z;
  }
  return acts;
}

void gate_backward(const Matrix& h, const GateWeights& gate, const GateActivations& acts,
                   std::span<const double> grad_logits, GateGrads grads, Matrix& grad_h) {
  const std::size_t hidden = gate.w1.cols();
  std::vector<double> pre(hidden);
  for (std::size_t r = 0; r < h.rows(); ++r) {
    const double gz = grad_logits[r];
    if (gz == 0.0) continue;
    grads.b2(0, 0) += gz;
    auto a = acts.hidden.row(r);
    for (std::size_t c = 0; c < hidden; ++c) {
      grads.w2(c, 0) += gz * a[c];
      pre[c] = gz * gate.w2(c, 0) * (1.0 - a[c] * a[c]);
      grads.b1(0, c) += pre[c];
    }
    auto gh = grad_h.row(r);
    for (std::size_t k = 0; k < h.cols(); ++k) {
      axpy(h(r, k), pre, grads.w1.row(k));
      gh[k] += dot(gate.w1.row(k), pre);
    }
  }
}

}  // namespace cotrans
