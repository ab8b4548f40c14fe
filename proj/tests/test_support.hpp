// Copyright 2026 The qoda Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Random fixtures shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "qoda/levels.hpp"
#include "qoda/quantizer.hpp"

namespace qoda::testing {

/// Strictly increasing interior levels drawn uniformly, alpha in [0, max_alpha].
inline LevelSequence random_sequence(Rng& rng, std::size_t max_alpha) {
  std::uniform_int_distribution<std::size_t> count(0, max_alpha);
  const std::size_t alpha = count(rng);
  std::vector<double> v{0.0, 1.0};
  while (v.size() < alpha + 2) {
    const double x = 0.01 + 0.98 * uniform01(rng);
    if (std::none_of(v.begin(), v.end(), [x](double y) { return std::abs(x - y) < 1e-6; })) {
      v.push_back(x);
    }
  }
  std::sort(v.begin(), v.end());
  return LevelSequence(v);
}

/// M random sequences with a random (possibly non-contiguous) assignment.
inline LevelFamily random_family(Rng& rng, std::size_t M, std::size_t d, int q,
                                 std::size_t max_alpha = 6) {
  std::vector<LevelSequence> seqs;
  for (std::size_t m = 0; m < M; ++m) seqs.push_back(random_sequence(rng, max_alpha));
  std::vector<std::size_t> assign(d);
  std::uniform_int_distribution<std::size_t> type(0, M - 1);
  for (auto& a : assign) a = type(rng);
  return LevelFamily(std::move(seqs), std::move(assign), q);
}

/// Gaussian entries with random per-coordinate scales, some exact zeros.
inline std::vector<double> random_vector(Rng& rng, std::size_t d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  for (auto& x : v) {
    x = uniform01(rng) < 0.05 ? 0.0 : normal(rng) * std::exp(2.0 * normal(rng));
  }
  return v;
}

}  // namespace qoda::testing
