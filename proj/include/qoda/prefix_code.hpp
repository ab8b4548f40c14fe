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

// Prefix codes over small integer alphabets: canonical Huffman, Elias omega,
// and a trie decoder.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "qoda/bitstream.hpp"
#include "qoda/error.hpp"

namespace qoda {

struct Codeword {
  std::uint64_t bits = 0;  // right-aligned, MSB is sent first
  unsigned length = 0;

  std::string str() const {
    std::string s;
    for (unsigned k = length; k-- > 0;) s.push_back(((bits >> k) & 1u) ? '1' : '0');
    return s;
  }

  friend bool operator==(const Codeword&, const Codeword&) = default;
};

inline constexpr unsigned kMaxCodewordLength = 64;

/// Huffman code lengths. Merges the two lightest nodes, ties broken by the
/// smaller symbol rank in the subtree, then by creation order. Zero-mass
/// symbols take part in the merge with weight 0, so they end up deepest.
/// A one-symbol alphabet gets a single 1-bit codeword.
inline std::vector<unsigned> huffman_lengths(std::span<const double> probs) {
  const std::size_t n = probs.size();
  if (n == 0) fail(ErrorCode::kEmptyAlphabet, "no symbols");
  bool any_positive = false;
  for (double p : probs) {
    if (!(p >= 0.0)) fail(ErrorCode::kInvalidHistogram, "negative probability");
    any_positive = any_positive || p > 0.0;
  }
  if (!any_positive) fail(ErrorCode::kEmptyAlphabet, "no symbol has positive mass");
  if (n == 1) return {1};

  struct Node {
    double weight;
    std::size_t rank;   // smallest symbol rank in the subtree
    std::size_t order;  // creation order
    std::size_t id;
  };
  auto heavier = [](const Node& a, const Node& b) {
    return std::tie(a.weight, a.rank, a.order) > std::tie(b.weight, b.rank, b.order);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(heavier)> heap(heavier);
  std::vector<std::size_t> parent(2 * n - 1, 0);
  for (std::size_t s = 0; s < n; ++s) heap.push({probs[s], s, s, s});
  std::size_t next = n;
  while (heap.size() > 1) {
    const Node a = heap.top();
    heap.pop();
    const Node b = heap.top();
    heap.pop();
    parent[a.id] = next;
    parent[b.id] = next;
    heap.push({a.weight + b.weight, std::min(a.rank, b.rank), next, next});
    ++next;
  }
  const std::size_t root = next - 1;
  std::vector<unsigned> depth(2 * n - 1, 0);
  for (std::size_t id = root; id-- > 0;) depth[id] = depth[parent[id]] + 1;
  std::vector<unsigned> lengths(depth.begin(), depth.begin() + static_cast<std::ptrdiff_t>(n));
  for (unsigned l : lengths) {
    if (l > kMaxCodewordLength) fail(ErrorCode::kCodeTooLong, "Huffman depth exceeds 64");
  }
  return lengths;
}

/// Canonical codewords for the given lengths: shorter codes first, then
/// positive-mass before zero-mass symbols, then by rank.
inline std::vector<Codeword> canonical_code(std::span<const unsigned> lengths,
                                            std::span<const double> probs) {
  const std::size_t n = lengths.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool za = probs[a] <= 0.0;
    const bool zb = probs[b] <= 0.0;
    return std::tie(lengths[a], za, a) < std::tie(lengths[b], zb, b);
  });
  std::vector<Codeword> out(n);
  std::uint64_t code = 0;
  unsigned prev = lengths[order.front()];
  bool first = true;
  for (std::size_t s : order) {
    if (!first) {
      ++code;
      code <<= (lengths[s] - prev);
    }
    first = false;
    prev = lengths[s];
    out[s] = {code, lengths[s]};
  }
  return out;
}

inline std::vector<Codeword> build_huffman(std::span<const double> probs) {
  const auto lengths = huffman_lengths(probs);
  return canonical_code(lengths, probs);
}

/// Elias omega codeword of k >= 1.
inline Codeword elias_omega(std::uint64_t k) {
  if (k == 0) fail(ErrorCode::kEmptyAlphabet, "Elias omega is defined for k >= 1");
  // Groups are prepended, so collect them back to front.
  std::vector<std::pair<std::uint64_t, unsigned>> groups;
  std::uint64_t n = k;
  while (n > 1) {
    const auto width = static_cast<unsigned>(std::bit_width(n));
    groups.emplace_back(n, width);
    n = width - 1;
  }
  Codeword cw;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    if (cw.length + it->second > kMaxCodewordLength) {
      fail(ErrorCode::kCodeTooLong, "Elias omega codeword exceeds 64 bits");
    }
    cw.bits = (cw.bits << it->second) | it->first;
    cw.length += it->second;
  }
  cw.bits <<= 1;  // terminating 0
  cw.length += 1;
  return cw;
}

/// Codeword of rank k + 1 for symbol k.
inline std::vector<Codeword> build_elias(std::size_t alphabet_size) {
  if (alphabet_size == 0) fail(ErrorCode::kEmptyAlphabet, "no symbols");
  std::vector<Codeword> out(alphabet_size);
  for (std::size_t k = 0; k < alphabet_size; ++k) out[k] = elias_omega(k + 1);
  return out;
}

/// Sum over codewords of 2^-length.
inline double kraft_sum(std::span<const Codeword> code) {
  double s = 0.0;
  for (const auto& c : code) s += std::ldexp(1.0, -static_cast<int>(c.length));
  return s;
}

/// Binary trie over a prefix-free code; leaves hold symbol ids.
class PrefixDecoder {
 public:
  PrefixDecoder() = default;

  explicit PrefixDecoder(std::span<const Codeword> code) {
    nodes_.push_back({});
    for (std::size_t s = 0; s < code.size(); ++s) insert(code[s], s);
  }

  std::size_t decode(BitReader& in) const {
    std::size_t node = 0;
    while (true) {
      const bool bit = in.read_bit();
      const auto next = nodes_[node].child[bit ? 1 : 0];
      if (next == kNone) fail(ErrorCode::kInvalidCodeword, "no codeword matches");
      node = next;
      if (nodes_[node].symbol != kNone) return nodes_[node].symbol;
    }
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  struct Node {
    std::size_t child[2] = {kNone, kNone};
    std::size_t symbol = kNone;
  };

  void insert(const Codeword& cw, std::size_t symbol) {
    if (cw.length == 0) fail(ErrorCode::kInvalidCodeword, "empty codeword");
    std::size_t node = 0;
    for (unsigned k = cw.length; k-- > 0;) {
      if (nodes_[node].symbol != kNone) {
        fail(ErrorCode::kInvalidCodeword, "code is not prefix-free");
      }
      const unsigned bit = (cw.bits >> k) & 1u;
      if (nodes_[node].child[bit] == kNone) {
        nodes_[node].child[bit] = nodes_.size();
        nodes_.push_back({});
      }
      node = nodes_[node].child[bit];
    }
    if (nodes_[node].symbol != kNone || nodes_[node].child[0] != kNone ||
        nodes_[node].child[1] != kNone) {
      fail(ErrorCode::kInvalidCodeword, "code is not prefix-free");
    }
    nodes_[node].symbol = symbol;
  }

  std::vector<Node> nodes_;
};

}  // namespace qoda
