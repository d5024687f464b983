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

#include <cmath>
#include <random>
#include <vector>

#include "cotrans/error.hpp"
#include "cotrans/transfer.hpp"
#include "doctest.h"

using namespace cotrans;

namespace {
using V = std::vector<double>;
}

TEST_SUITE("transfer") {
  TEST_CASE("score examples") {
    CHECK(score(V{0, 0}, V{1, 1}, V{1, -1}) == 0.0);
    CHECK(score(V{1, 0}, V{0, 1}, V{2, 3}) == 5.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    for (int k = 0; k < 50; ++k) {
      V a(8), b(8), c(8);
      for (int j = 0; j < 8; ++j) a[j] = n(rng), b[j] = n(rng), c[j] = n(rng);
      double ref = 0.0;
      for (int j = 0; j < 8; ++j) ref += (a[j] + b[j]) * c[j];
      CHECK(score(a, b, c) == doctest::Approx(ref).epsilon(1e-14));
      // Bilinear in the fused user vector.
      V a2 = a, b2 = b;
      for (int j = 0; j < 8; ++j) a2[j] *= 2.5, b2[j] *= 2.5;
      CHECK(score(a2, b2, c) == doctest::Approx(2.5 * score(a, b, c)).epsilon(1e-13));
    }
  }

  TEST_CASE("BPR values") {
    CHECK(bpr_loss(V{0.4}, V{0.4}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(bpr_loss(V{1.0}, V{0.0}) == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-15));
    CHECK(bpr_loss(V{1.0}, V{0.0}) == doctest::Approx(0.31326).epsilon(1e-5));
    CHECK(bpr_loss(V{800.0}, V{0.0}) == 0.0);
    CHECK(bpr_loss(V{0.0}, V{800.0}) == doctest::Approx(800.0));
  }

  TEST_CASE("BPR is decreasing in the margin and translation invariant") {
    double prev = bpr_loss(V{-5.0}, V{0.0});
    for (double d = -4.9; d < 5.0; d += 0.1) {
      double cur = bpr_loss(V{d}, V{0.0});
      CHECK(cur < prev);
      CHECK(bpr_loss(V{d + 3.0}, V{3.0}) == doctest::Approx(cur).epsilon(1e-12));
      prev = cur;
    }
  }

  TEST_CASE("prediction loss gradients match central differences") {
    V pos{0.3, -1.0, 2.0}, neg{0.1, 0.5, -0.5};
    V gp(3), gn(3);
    const double eps = 1e-6;
    for (bool bce : {false, true}) {
      auto f = [&](const V& p, const V& n) { return bce ? bce_loss(p, n) : bpr_loss(p, n); };
      if (bce) {
        bce_loss_grad(pos, neg, gp, gn);
      } else {
        bpr_loss_grad(pos, neg, gp, gn);
      }
      for (int k = 0; k < 3; ++k) {
        V up = pos, down = pos;
        up[k] += eps;
        down[k] -= eps;
        CHECK((f(up, neg) - f(down, neg)) / (2 * eps) == doctest::Approx(gp[k]).epsilon(1e-7));
        up = neg;
        down = neg;
        up[k] += eps;
        down[k] -= eps;
        CHECK((f(pos, up) - f(pos, down)) / (2 * eps) == doctest::Approx(gn[k]).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("total loss weighting") {
    LossBundle none = total_loss(1.5, 2.0, 3.0, 4.0, {0.0, 0.0, 0.0});
    CHECK(none.total == 1.5);
    LossBundle l = total_loss(1.0, 2.0, 3.0, 4.0, {0.1, 0.5, 0.25});
    CHECK(l.total == doctest::Approx(3.7).epsilon(1e-15));
    CHECK(l.pred_source == 2.0);
    CHECK_THROWS_AS(total_loss(1, 1, 1, 1, {-0.1, 0.0, 0.0}), Error);
  }

  TEST_CASE("default weights and published presets") {
    Alphas d;
    CHECK(d == Alphas{0.01, 1.0, 1.0});
    CHECK(alpha_preset("AM->AB") == Alphas{0.01, 1.0, 1.0});
    CHECK(alpha_preset("AB->AM") == Alphas{0.01, 0.01, 0.1});
    CHECK(alpha_preset("AM->AC") == Alphas{0.001, 1.0, 5.0});
    CHECK(alpha_preset("AC->AM") == Alphas{0.01, 1.0, 5.0});
    CHECK(alpha_preset("AB->AC") == Alphas{0.1, 1.0, 1.0});
    CHECK(alpha_preset("AC->AB") == Alphas{0.1, 1.0, 1.0});
    CHECK_FALSE(alpha_preset("XX->YY").has_value());
  }
}
