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

// Quantization level sequences grouped into families, with the closed-form
// variance-inflation bound of layer-wise quantization.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qoda/error.hpp"

namespace qoda {

/// Returns the violated invariant, or nullopt when `levels` is a valid
/// sequence 0 = l_0 < l_1 < ... < l_{alpha+1} = 1.
inline std::optional<ErrorCode> check_level_sequence(
    std::span<const double> levels) {
  if (levels.size() < 2) return ErrorCode::kEmptySequence;
  if (levels.front() != 0.0 || levels.back() != 1.0) {
    return ErrorCode::kBadEndpoints;
  }
  for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
    if (!(levels[j] < levels[j + 1])) return ErrorCode::kNotSorted;
  }
  return std::nullopt;
}

/// An ordered set of quantization levels on [0, 1], endpoints included.
class LevelSequence {
 public:
  LevelSequence() : levels_{0.0, 1.0} {}

  explicit LevelSequence(std::vector<double> levels)
      : levels_(std::move(levels)) {
    if (auto err = check_level_sequence(levels_)) {
      fail(*err, "invalid level sequence of size " +
                     std::to_string(levels_.size()));
    }
  }

  /// `interior` evenly spaced interior levels j / (interior + 1).
  static LevelSequence uniform(std::size_t interior) {
    std::vector<double> v(interior + 2);
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = static_cast<double>(j) / static_cast<double>(interior + 1);
    }
    v.back() = 1.0;
    return LevelSequence(std::move(v));
  }

  /// `interior` levels 2^-interior, ..., 1/4, 1/2.
  static LevelSequence exponential(std::size_t interior) {
    std::vector<double> v(interior + 2);
    v.front() = 0.0;
    for (std::size_t j = 1; j <= interior; ++j) {
      v[j] = std::ldexp(1.0, static_cast<int>(j) - static_cast<int>(interior) - 1);
    }
    v.back() = 1.0;
    return LevelSequence(std::move(v));
  }

  std::size_t alpha() const { return levels_.size() - 2; }
  std::size_t size() const { return levels_.size(); }
  double operator[](std::size_t j) const { return levels_[j]; }
  std::span<const double> levels() const { return levels_; }

  /// Largest ratio l_{j+1} / l_j over interior j in [1, alpha]; 1 if alpha = 0.
  double max_interior_ratio() const {
    double r = 1.0;
    for (std::size_t j = 1; j + 1 < levels_.size(); ++j) {
      r = std::max(r, levels_[j + 1] / levels_[j]);
    }
    return r;
  }

  friend bool operator==(const LevelSequence&, const LevelSequence&) = default;

 private:
  std::vector<double> levels_;
};

/// M level sequences plus the static coordinate -> type assignment.
class LevelFamily {
 public:
  LevelFamily() = default;

  LevelFamily(std::vector<LevelSequence> sequences,
              std::vector<std::size_t> assignment, int norm_order = 2)
      : sequences_(std::move(sequences)),
        assignment_(std::move(assignment)),
        norm_order_(norm_order) {
    if (sequences_.empty()) fail(ErrorCode::kBadFamily, "no level sequences");
    if (assignment_.empty()) fail(ErrorCode::kBadFamily, "empty assignment");
    if (norm_order_ < 1) {
      fail(ErrorCode::kBadFamily,
           "norm order must be a positive integer, got " +
               std::to_string(norm_order_));
    }
    counts_.assign(sequences_.size(), 0);
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      if (assignment_[i] >= sequences_.size()) {
        fail(ErrorCode::kBadFamily, "coordinate " + std::to_string(i) +
                                        " assigned to missing type " +
                                        std::to_string(assignment_[i]));
      }
      ++counts_[assignment_[i]];
    }
  }

  /// One sequence for every coordinate of a d-dimensional vector.
  static LevelFamily single(LevelSequence seq, std::size_t dim,
                            int norm_order = 2) {
    return LevelFamily({std::move(seq)}, std::vector<std::size_t>(dim, 0),
                       norm_order);
  }

  std::size_t num_types() const { return sequences_.size(); }
  std::size_t dim() const { return assignment_.size(); }
  int norm_order() const { return norm_order_; }

  const LevelSequence& sequence(std::size_t m) const { return sequences_[m]; }
  const std::vector<LevelSequence>& sequences() const { return sequences_; }
  std::size_t type_of(std::size_t i) const { return assignment_[i]; }
  const std::vector<std::size_t>& assignment() const { return assignment_; }

  std::size_t count(std::size_t m) const { return counts_[m]; }
  double proportion(std::size_t m) const {
    return static_cast<double>(counts_[m]) / static_cast<double>(dim());
  }
  bool unused(std::size_t m) const { return counts_[m] == 0; }

  /// Same assignment and norm, new sequences (one per existing type).
  LevelFamily with_sequences(std::vector<LevelSequence> sequences) const {
    if (sequences.size() != sequences_.size()) {
      fail(ErrorCode::kBadFamily, "type count changed on level update");
    }
    return LevelFamily(std::move(sequences), assignment_, norm_order_);
  }

  friend bool operator==(const LevelFamily& a, const LevelFamily& b) {
    return a.sequences_ == b.sequences_ && a.assignment_ == b.assignment_ &&
           a.norm_order_ == b.norm_order_;
  }

 private:
  std::vector<LevelSequence> sequences_;
  std::vector<std::size_t> assignment_;
  std::vector<std::size_t> counts_;
  int norm_order_ = 2;
};

/// Contiguous blocks: layer k spans `layer_sizes[k]` coordinates and uses
/// type `layer_types[k]`.
inline std::vector<std::size_t> assignment_from_layers(
    std::span<const std::size_t> layer_sizes,
    std::span<const std::size_t> layer_types) {
  if (layer_sizes.size() != layer_types.size()) {
    fail(ErrorCode::kBadFamily, "layer_sizes and layer_types differ in length");
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < layer_sizes.size(); ++k) {
    out.insert(out.end(), layer_sizes[k], layer_types[k]);
  }
  return out;
}

struct BoundStats {
  double lbar = 1.0;   // max interior ratio across types
  double lbar1 = 1.0;  // max first level across types
  double d_th = 4.0;   // threshold dimension
  double eps_q = 0.0;
};

inline BoundStats family_stats(const LevelFamily& family) {
  BoundStats s;
  s.lbar = 1.0;
  s.lbar1 = 0.0;
  for (const auto& seq : family.sequences()) {
    s.lbar = std::max(s.lbar, seq.max_interior_ratio());
    s.lbar1 = std::max(s.lbar1, seq[1]);
  }
  const double p = std::min(2, family.norm_order());
  s.d_th = std::pow(2.0 / s.lbar1, p);
  return s;
}

/// Variance inflation eps_Q such that E||Q(v) - v||^2 <= eps_Q ||v||_2^2 for
/// every v in R^d.
inline double variance_bound_eps(const BoundStats& s, int norm_order,
                                 std::size_t d) {
  if (d == 0) fail(ErrorCode::kBadDimension, "dimension must be positive");
  const double p = std::min(2, norm_order);
  const double dd = static_cast<double>(d);
  const double interior = (s.lbar - 1.0) * (s.lbar - 1.0) / (4.0 * s.lbar);
  if (dd >= s.d_th) return interior + (s.lbar1 * std::pow(dd, 1.0 / p) - 1.0);
  return interior + 0.25 * s.lbar1 * s.lbar1 * std::pow(dd, 2.0 / p);
}

inline double variance_bound_eps(const LevelFamily& family, std::size_t d) {
  return variance_bound_eps(family_stats(family), family.norm_order(), d);
}

inline BoundStats bound_stats(const LevelFamily& family, std::size_t d) {
  BoundStats s = family_stats(family);
  s.eps_q = variance_bound_eps(s, family.norm_order(), d);
  return s;
}

}  // namespace qoda
