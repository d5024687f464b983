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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cotrans/compression.hpp"
#include "cotrans/error.hpp"
#include "cotrans/random.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cotrans;

namespace {

// Closed-form KL( N(m1, s1^2) || N(m0, s0^2) ).
double gaussian_kl(double m1, double s1, double m0, double s0) {
  return std::log(s0 / s1) + (s1 * s1 + (m1 - m0) * (m1 - m0)) / (2 * s0 * s0) - 0.5;
}

double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace

TEST_SUITE("compression") {
  TEST_CASE("merge is element-wise addition") {
    std::mt19937_64 rng(1);
    Matrix es = oracle::random_matrix(rng, 4, 3);
    Matrix et = oracle::random_matrix(rng, 4, 3);
    Matrix h = merge_representations(es, et);
    for (std::size_t k = 0; k < h.size(); ++k) {
      CHECK(h.values()[k] == es.values()[k] + et.values()[k]);
    }
    CHECK(merge_representations(Matrix(4, 3), et) == et);
    Matrix neg = et;
    for (double& v : neg.values()) v = -v;
    const Matrix cancelled = merge_representations(neg, et);
    for (double v : cancelled.values()) CHECK(v == 0.0);
    CHECK_THROWS_AS(merge_representations(es, Matrix(3, 3)), Error);
  }

  TEST_CASE("gumbel-sigmoid point values") {
    CHECK(gumbel_sigmoid(0.0, 0.5, 1.0) == 0.5);
    CHECK(gumbel_sigmoid(2.0, 0.5, 0.01) > 1.0 - 1e-12);
    long double z = 0.3L, m = 0.7L, t = 0.5L;
    long double ref = 1.0L / (1.0L + std::exp(-(z + std::log(m / (1.0L - m))) / t));
    CHECK(std::abs(gumbel_sigmoid(0.3, 0.7, 0.5) - static_cast<double>(ref)) <= 1e-15);
    CHECK_THROWS_AS(gumbel_sigmoid(0.0, 0.5, 0.0), Error);
    CHECK_THROWS_AS(gumbel_sigmoid(0.0, 0.5, -1.0), Error);
    CHECK_THROWS_AS(gumbel_sigmoid(0.0, 0.0, 1.0), Error);
    CHECK_THROWS_AS(gumbel_sigmoid(0.0, 1.0, 1.0), Error);
  }

  TEST_CASE("gumbel-sigmoid is monotone in the logit and the draw") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.01, 0.99), z(-3, 3);
    for (int k = 0; k < 200; ++k) {
      double m = u(rng), logit = z(rng);
      CHECK(gumbel_sigmoid(logit + 0.01, m, 0.5) > gumbel_sigmoid(logit, m, 0.5));
      CHECK(gumbel_sigmoid(logit, std::min(m + 0.005, 0.999), 0.5) > gumbel_sigmoid(logit, m, 0.5));
    }
  }

  TEST_CASE("low-temperature gate frequency tracks sigmoid(z)") {
    CounterStream s(9, 1);
    std::uint64_t c = 0;
    for (double logit : {-2.0, -0.5, 0.0, 0.8, 2.5}) {
      int above = 0;
      const int n = 100000;
      for (int k = 0; k < n; ++k) above += gumbel_sigmoid(logit, s.uniform(c++), 0.1) > 0.5;
      CHECK(std::abs(above / static_cast<double>(n) - sigmoid(logit)) <= 0.01);
    }
  }

  TEST_CASE("noise mixing endpoints and midpoint") {
    Matrix h(1, 2);
    h(0, 0) = 2.0;
    BatchStats stats{{0.0, 1.0}, {1.0, 0.5}};
    Matrix draws(1, 2);
    draws(0, 1) = 2.0;  // epsilon = [0, 1 + 0.5 * 2] = [0, 2]
    MixedRepresentation half = mix_noise(h, std::vector<double>{0.5}, stats, draws);
    CHECK(half.noise(0, 0) == 0.0);
    CHECK(half.noise(0, 1) == 2.0);
    CHECK(half.mixed(0, 0) == 1.0);
    CHECK(half.mixed(0, 1) == 1.0);
    CHECK(mix_noise(h, std::vector<double>{1.0}, stats, draws).mixed == h);
    MixedRepresentation closed = mix_noise(h, std::vector<double>{0.0}, stats, draws);
    CHECK(closed.mixed == closed.noise);
  }

  TEST_CASE("batch statistics are population moments with a floor") {
    Matrix h(2, 2);
    h(0, 0) = 1.0;
    h(1, 0) = 3.0;
    h(0, 1) = h(1, 1) = 5.0;
    BatchStats s = batch_statistics(h, 1e-4);
    CHECK(s.mean[0] == 2.0);
    CHECK(s.stddev[0] == 1.0);
    CHECK(s.mean[1] == 5.0);
    CHECK(s.stddev[1] == 1e-4);
  }

  TEST_CASE("inference mixing uses the gate probability and the mean") {
    Matrix h(1, 2);
    h(0, 0) = 4.0;
    BatchStats s{{2.0, 2.0}, {1.0, 1.0}};
    Matrix m = mix_expected(h, std::vector<double>{0.25}, s);
    CHECK(m(0, 0) == doctest::Approx(0.25 * 4.0 + 0.75 * 2.0));
    CHECK(m(0, 1) == doctest::Approx(1.5));
  }

  TEST_CASE("closed gates give -ln(B)/2 + 1/2") {
    std::mt19937_64 rng(3);
    Matrix h = oracle::random_matrix(rng, 4, 3);
    BatchStats s = batch_statistics(h, 1e-4);
    KlBound kl = l_kl(std::vector<double>(4, 0.0), h, s, 1e-6);
    CHECK(kl.value == doctest::Approx(-0.5 * std::log(4.0) + 0.5).epsilon(1e-14));
    CHECK(kl.value == doctest::Approx(-0.19315).epsilon(1e-4));
  }

  TEST_CASE("open gates hit the floor and stay finite") {
    std::mt19937_64 rng(4);
    Matrix h = oracle::random_matrix(rng, 3, 2);
    BatchStats s = batch_statistics(h, 1e-4);
    KlBound kl = l_kl(std::vector<double>(3, 1.0), h, s, 1e-6);
    CHECK(kl.m_floored);
    CHECK(std::isfinite(kl.value));
    CHECK(kl.value >= -0.5 * std::log(1e-6) - 1e-9);
  }

  TEST_CASE("single-sample bound exceeds the Gaussian KL by one half") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lam(0.001, 0.999), val(-5, 5), sd(0.05, 5);
    for (int k = 0; k < 1000; ++k) {
      const double l = lam(rng), hv = val(rng), mu = val(rng), sigma = sd(rng);
      Matrix h(1, 1, hv);
      BatchStats s{{mu}, {sigma}};
      double bound = l_kl(std::vector<double>{l}, h, s, 1e-300).value;
      double kl = gaussian_kl(l * hv + (1 - l) * mu, (1 - l) * sigma, mu, sigma);
      CHECK(std::abs(bound - kl - 0.5) <= 1e-10);
    }
  }

  TEST_CASE("KL bound gradients match central differences") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> lam(0.05, 0.95);
    for (int trial = 0; trial < 10; ++trial) {
      Matrix h = oracle::random_matrix(rng, 5, 3);
      BatchStats s = batch_statistics(h, 1e-4);
      std::vector<double> l(5);
      for (double& v : l) v = lam(rng);
      KlBound kl = l_kl(l, h, s, 1e-6, true);
      const double eps = 1e-6;
      for (std::size_t j = 0; j < l.size(); ++j) {
        auto up = l, down = l;
        up[j] += eps;
        down[j] -= eps;
        double fd = (l_kl(up, h, s, 1e-6).value - l_kl(down, h, s, 1e-6).value) / (2 * eps);
        CHECK(rel_err(fd, kl.grad_lambda[j]) <= 1e-5);
      }
      for (std::size_t k = 0; k < h.size(); ++k) {
        Matrix up = h, down = h;
        up.values()[k] += eps;
        down.values()[k] -= eps;
        double fd = (l_kl(l, up, s, 1e-6).value - l_kl(l, down, s, 1e-6).value) / (2 * eps);
        CHECK(rel_err(fd, kl.grad_h.values()[k]) <= 1e-5);
      }
    }
  }

  TEST_CASE("contrastive loss examples") {
    Matrix one(1, 2, 1.0);
    CHECK(l_cl(one, one, 0.2).value == 0.0);

    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    double v = l_cl(eye, eye, 1.0).value;
    CHECK(v == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-14));
    CHECK(v == doctest::Approx(0.31326).epsilon(1e-5));
    CHECK_THROWS_AS(l_cl(eye, eye, 0.0), Error);
  }

  TEST_CASE("contrastive loss invariances") {
    std::mt19937_64 rng(7);
    Matrix t = oracle::random_matrix(rng, 6, 4);
    Matrix m = oracle::random_matrix(rng, 6, 4);
    const double base = l_cl(t, m, 0.2).value;
    CHECK(base >= 0.0);
    Matrix ts = t, ms = m;
    for (double& x : ts.values()) x *= 3.7;
    for (double& x : ms.values()) x *= 0.01;
    CHECK(l_cl(ts, ms, 0.2).value == doctest::Approx(base).epsilon(1e-12));
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix tp(6, 4), mp(6, 4);
    for (std::size_t r = 0; r < 6; ++r) {
      std::copy(t.row(perm[r]).begin(), t.row(perm[r]).end(), tp.row(r).begin());
      std::copy(m.row(perm[r]).begin(), m.row(perm[r]).end(), mp.row(r).begin());
    }
    CHECK(l_cl(tp, mp, 0.2).value == doctest::Approx(base).epsilon(1e-12));
  }

  TEST_CASE("contrastive loss gradients match central differences") {
    std::mt19937_64 rng(8);
    Matrix t = oracle::random_matrix(rng, 4, 3);
    Matrix m = oracle::random_matrix(rng, 4, 3);
    ContrastiveLoss cl = l_cl(t, m, 0.2, 1e-12, true);
    const double eps = 1e-6;
    for (std::size_t k = 0; k < t.size(); ++k) {
      Matrix up = t, down = t;
      up.values()[k] += eps;
      down.values()[k] -= eps;
      double fd = (l_cl(up, m, 0.2).value - l_cl(down, m, 0.2).value) / (2 * eps);
      CHECK(rel_err(fd, cl.grad_target.values()[k]) <= 1e-5);
      up = m;
      down = m;
      up.values()[k] += eps;
      down.values()[k] -= eps;
      fd = (l_cl(t, up, 0.2).value - l_cl(t, down, 0.2).value) / (2 * eps);
      CHECK(rel_err(fd, cl.grad_mixed.values()[k]) <= 1e-5);
    }
  }

  TEST_CASE("gate network gradients match central differences") {
    std::mt19937_64 rng(9);
    Matrix h = oracle::random_matrix(rng, 3, 4);
    Matrix w1 = oracle::random_matrix(rng, 4, 5, 0.5), b1 = oracle::random_matrix(rng, 1, 5, 0.1);
    Matrix w2 = oracle::random_matrix(rng, 5, 1, 0.5), b2 = oracle::random_matrix(rng, 1, 1, 0.1);
    std::vector<double> upstream = {0.3, -1.2, 0.7};
    auto f = [&](const Matrix& hh, const Matrix& a, const Matrix& b, const Matrix& c,
                 const Matrix& d) {
      GateActivations acts = gate_forward(hh, GateWeights{a, b, c, d});
      double s = 0.0;
      for (std::size_t i = 0; i < upstream.size(); ++i) s += upstream[i] * acts.logits[i];
      return s;
    };
    GateActivations acts = gate_forward(h, GateWeights{w1, b1, w2, b2});
    Matrix gw1(4, 5), gb1(1, 5), gw2(5, 1), gb2(1, 1), gh(3, 4);
    gate_backward(h, GateWeights{w1, b1, w2, b2}, acts, upstream, GateGrads{gw1, gb1, gw2, gb2},
                  gh);
    const double eps = 1e-6;
    auto probe = [&](Matrix& target, const Matrix& grad, int which) {
      for (std::size_t k = 0; k < target.size(); ++k) {
        const double saved = target.values()[k];
        target.values()[k] = saved + eps;
        double up = f(h, w1, b1, w2, b2);
        target.values()[k] = saved - eps;
        double down = f(h, w1, b1, w2, b2);
        target.values()[k] = saved;
        INFO("tensor " << which << " index " << k);
        CHECK(rel_err((up - down) / (2 * eps), grad.values()[k]) <= 1e-6);
      }
    };
    probe(h, gh, 0);
    probe(w1, gw1, 1);
    probe(b1, gb1, 2);
    probe(w2, gw2, 3);
    probe(b2, gb2, 4);
  }
}
