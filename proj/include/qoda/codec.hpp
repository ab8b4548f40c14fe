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

// Wire coding of quantized vectors.
//
// Layout (bit-exact, MSB first):
//
//   [norm: IEEE-754 binary32, big-endian]
//   if norm != 0, for i = 0 .. d-1:
//     [codeword of (type(i), level_idx[i])] [sign bit iff level_idx[i] > 0]
//   zero padding to a byte boundary
//
// The sign bit is 1 for negative coordinates. Under the Main protocol each
// type has its own prefix code and the receiver resolves the type from the
// static assignment; under the Alternating protocol a single prefix code
// covers every (type, level) pair.

#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qoda/bitstream.hpp"
#include "qoda/distribution.hpp"
#include "qoda/error.hpp"
#include "qoda/levels.hpp"
#include "qoda/prefix_code.hpp"
#include "qoda/quantizer.hpp"

namespace qoda {

enum class Protocol { kMain, kAlternating };
enum class Scheme { kHuffman, kElias };

inline constexpr unsigned kNormBits = 32;

/// Per-type probabilities of each level being emitted.
class LevelHistogram {
 public:
  LevelHistogram() = default;

  explicit LevelHistogram(std::vector<std::vector<double>> rows)
      : rows_(std::move(rows)) {
    for (std::size_t m = 0; m < rows_.size(); ++m) {
      double s = 0.0;
      for (double p : rows_[m]) {
        if (!(p >= 0.0)) {
          fail(ErrorCode::kInvalidHistogram,
               "negative or NaN entry in row " + std::to_string(m));
        }
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) {
        fail(ErrorCode::kInvalidHistogram,
             "row " + std::to_string(m) + " sums to " + std::to_string(s));
      }
    }
  }

  std::size_t num_types() const { return rows_.size(); }
  const std::vector<double>& row(std::size_t m) const { return rows_[m]; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  /// Rows must match the family's types and alphabet sizes.
  void check_against(const LevelFamily& family) const {
    if (rows_.size() != family.num_types()) {
      fail(ErrorCode::kInvalidHistogram, "histogram has " +
                                             std::to_string(rows_.size()) +
                                             " rows for " +
                                             std::to_string(family.num_types()) +
                                             " types");
    }
    for (std::size_t m = 0; m < rows_.size(); ++m) {
      if (rows_[m].size() != family.sequence(m).size()) {
        fail(ErrorCode::kInvalidHistogram,
             "row " + std::to_string(m) + " has wrong alphabet size");
      }
    }
  }

 private:
  std::vector<std::vector<double>> rows_;
};

/// Probability of each level of `seq` under stochastic rounding of u ~ cdf.
template <typename Cdf>
std::vector<double> estimate_level_probs(const Cdf& cdf, const LevelSequence& seq) {
  const Moments total = cdf.total();
  if (!(std::abs(total.mass - 1.0) <= 1e-9)) {
    fail(ErrorCode::kInvalidCdf, "distribution mass is " + std::to_string(total.mass));
  }
  std::vector<double> p(seq.size(), 0.0);
  for (std::size_t j = 0; j + 1 < seq.size(); ++j) {
    const double lo = seq[j];
    const double hi = seq[j + 1];
    const Moments m = interval_moments(cdf, lo, hi);
    const double width = hi - lo;
    p[j] += (hi * m.mass - m.m1) / width;
    p[j + 1] += (m.m1 - lo * m.mass) / width;
  }
  double s = 0.0;
  for (double& x : p) {
    x = std::max(0.0, x);
    s += x;
  }
  for (double& x : p) x /= s;
  return p;
}

inline std::vector<double> estimate_level_probs(const TypeCdf& cdf,
                                                const LevelSequence& seq) {
  return std::visit([&](const auto& c) { return estimate_level_probs(c, seq); }, cdf);
}

/// Codewords for every (type, level) pair plus the matching decoders.
class Codebook {
 public:
  Codebook() = default;

  Codebook(Protocol protocol, Scheme scheme,
           std::vector<std::vector<Codeword>> words)
      : protocol_(protocol), scheme_(scheme), words_(std::move(words)) {
    if (protocol_ == Protocol::kMain) {
      for (const auto& row : words_) decoders_.emplace_back(row);
    } else {
      std::vector<Codeword> flat;
      for (std::size_t m = 0; m < words_.size(); ++m) {
        offsets_.push_back(flat.size());
        flat.insert(flat.end(), words_[m].begin(), words_[m].end());
      }
      offsets_.push_back(flat.size());
      decoders_.emplace_back(flat);
    }
  }

  Protocol protocol() const { return protocol_; }
  Scheme scheme() const { return scheme_; }
  std::size_t num_types() const { return words_.size(); }
  const std::vector<Codeword>& words(std::size_t m) const { return words_[m]; }
  const Codeword& word(std::size_t m, std::size_t j) const { return words_[m][j]; }

  /// Decodes one symbol for a coordinate of type `m`; returns its level index.
  std::size_t decode_symbol(BitReader& in, std::size_t m) const {
    if (protocol_ == Protocol::kMain) return decoders_[m].decode(in);
    const std::size_t flat = decoders_.front().decode(in);
    if (flat < offsets_[m] || flat >= offsets_[m + 1]) {
      fail(ErrorCode::kInvalidCodeword,
           "codeword belongs to a different type than the coordinate");
    }
    return flat - offsets_[m];
  }

  void check_against(const LevelFamily& family) const {
    if (words_.size() != family.num_types()) {
      fail(ErrorCode::kMissingCodeword, "codebook covers " +
                                            std::to_string(words_.size()) +
                                            " types, family has " +
                                            std::to_string(family.num_types()));
    }
    for (std::size_t m = 0; m < words_.size(); ++m) {
      if (words_[m].size() != family.sequence(m).size()) {
        fail(ErrorCode::kMissingCodeword,
             "type " + std::to_string(m) + " alphabet size mismatch");
      }
    }
  }

 private:
  Protocol protocol_ = Protocol::kMain;
  Scheme scheme_ = Scheme::kHuffman;
  std::vector<std::vector<Codeword>> words_;
  std::vector<PrefixDecoder> decoders_;
  std::vector<std::size_t> offsets_;
};

/// Huffman tables come from `hist`; Elias tables only need alphabet sizes.
/// Alternating Huffman uses the joint distribution mu^m * p^m_j; Alternating
/// Elias ranks all (type, level) pairs by level value, then type.
inline Codebook build_codebook(const LevelFamily& family, const LevelHistogram& hist,
                               Protocol protocol, Scheme scheme) {
  const std::size_t M = family.num_types();
  std::vector<std::vector<Codeword>> words(M);
  if (protocol == Protocol::kMain) {
    for (std::size_t m = 0; m < M; ++m) {
      words[m] = scheme == Scheme::kHuffman
                     ? build_huffman(hist.row(m))
                     : build_elias(family.sequence(m).size());
    }
    return Codebook(protocol, scheme, std::move(words));
  }

  struct Symbol {
    std::size_t type;
    std::size_t level;
  };
  std::vector<Symbol> symbols;
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t j = 0; j < family.sequence(m).size(); ++j) symbols.push_back({m, j});
  }
  std::vector<Codeword> flat;
  if (scheme == Scheme::kHuffman) {
    std::vector<double> joint;
    for (const auto& s : symbols) {
      joint.push_back(family.proportion(s.type) * hist.row(s.type)[s.level]);
    }
    flat = build_huffman(joint);
  } else {
    std::vector<std::size_t> order(symbols.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = family.sequence(symbols[a].type)[symbols[a].level];
      const double vb = family.sequence(symbols[b].type)[symbols[b].level];
      return std::tie(va, symbols[a].type) < std::tie(vb, symbols[b].type);
    });
    flat.resize(symbols.size());
    for (std::size_t r = 0; r < order.size(); ++r) flat[order[r]] = elias_omega(r + 1);
  }
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    words[symbols[k].type].push_back(flat[k]);
  }
  return Codebook(protocol, scheme, std::move(words));
}

struct EncodedMessage {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;
  Protocol protocol = Protocol::kMain;
};

/// The norm travels as binary32; a norm that rounds to zero is sent as an
/// all-zero message.
inline EncodedMessage encode(const QuantizedVector& qv, const Codebook& books,
                             const LevelFamily& family) {
  books.check_against(family);
  detail::check_dim(qv.dim(), family);
  const auto norm32 = static_cast<float>(qv.norm);
  if (!std::isfinite(norm32) || norm32 < 0.0f) {
    fail(ErrorCode::kNonFinite, "norm not representable as binary32");
  }
  BitWriter out;
  out.write(std::bit_cast<std::uint32_t>(norm32), kNormBits);
  if (norm32 != 0.0f) {
    for (std::size_t i = 0; i < qv.dim(); ++i) {
      const std::size_t m = family.type_of(i);
      const std::size_t j = qv.level_idx[i];
      if (j >= books.words(m).size()) {
        fail(ErrorCode::kMissingCodeword, "no codeword for level " +
                                              std::to_string(j) + " of type " +
                                              std::to_string(m));
      }
      const Codeword& cw = books.word(m, j);
      out.write(cw.bits, cw.length);
      if (j > 0) out.write_bit(qv.negative[i] != 0);
    }
  }
  EncodedMessage msg;
  msg.bit_length = out.bit_length();
  msg.bytes = out.take_bytes();
  msg.protocol = books.protocol();
  return msg;
}

inline QuantizedVector decode(const EncodedMessage& msg, const Codebook& books,
                              const LevelFamily& family, std::size_t d) {
  books.check_against(family);
  if (d != family.dim()) {
    fail(ErrorCode::kDimensionMismatch, "decode dimension differs from family");
  }
  if (msg.protocol != books.protocol()) {
    fail(ErrorCode::kInvalidCodeword, "message protocol differs from codebook");
  }
  if (msg.bit_length < kNormBits) {
    fail(ErrorCode::kTruncatedMessage, "message shorter than the norm field");
  }
  BitReader in(msg.bytes, msg.bit_length);
  QuantizedVector qv;
  qv.negative.assign(d, 0);
  qv.level_idx.assign(d, 0);
  const auto raw = static_cast<std::uint32_t>(in.read(kNormBits));
  const float norm32 = std::bit_cast<float>(raw);
  if (!std::isfinite(norm32) || norm32 < 0.0f) {
    fail(ErrorCode::kInvalidCodeword, "norm field is not a finite non-negative float");
  }
  qv.norm = static_cast<double>(norm32);
  if (norm32 != 0.0f) {
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t j = books.decode_symbol(in, family.type_of(i));
      qv.level_idx[i] = static_cast<std::uint32_t>(j);
      if (j > 0) qv.negative[i] = in.read_bit() ? 1 : 0;
    }
  } else {
    qv.norm = 0.0;
  }
  if (in.remaining() != 0) {
    fail(ErrorCode::kTrailingBits,
         std::to_string(in.remaining()) + " bits after the last coordinate");
  }
  // Only zero padding up to the next byte boundary is tolerated.
  if (msg.bytes.size() != (msg.bit_length + 7) / 8) {
    fail(ErrorCode::kTrailingBits, "buffer longer than the padded message");
  }
  if (msg.bit_length % 8 != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xFFu >> (msg.bit_length % 8));
    if (msg.bytes.back() & pad_mask) fail(ErrorCode::kTrailingBits, "non-zero padding");
  }
  return qv;
}

/// Entropy in bits; zero entries contribute nothing.
inline double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return h;
}

/// Expected bits of a message: norm field, one codeword per coordinate, one
/// sign bit per nonzero level, all level entropies taken over the full
/// alphabet of the type. Alternating uses the joint distribution mu^m p^m_j.
inline double code_length_bound(const LevelHistogram& hist, const LevelFamily& family,
                                std::size_t d, Protocol protocol) {
  hist.check_against(family);
  const double dd = static_cast<double>(d);
  double nonzero = 0.0;
  double symbol_bits = 0.0;
  if (protocol == Protocol::kMain) {
    for (std::size_t m = 0; m < family.num_types(); ++m) {
      const double mu = family.proportion(m);
      nonzero += (1.0 - hist.row(m)[0]) * mu * dd;
      symbol_bits += (entropy_bits(hist.row(m)) + 1.0) * mu * dd;
    }
  } else {
    std::vector<double> joint;
    double p0 = 0.0;
    for (std::size_t m = 0; m < family.num_types(); ++m) {
      const double mu = family.proportion(m);
      p0 += mu * hist.row(m)[0];
      for (double p : hist.row(m)) joint.push_back(mu * p);
    }
    nonzero = (1.0 - p0) * dd;
    symbol_bits = (entropy_bits(joint) + 1.0) * dd;
  }
  return static_cast<double>(kNormBits) + nonzero + symbol_bits;
}

/// Exact expected bits with the given codebook when level j of type m is
/// emitted with probability hist.row(m)[j] (norm != 0).
inline double expected_code_length(const Codebook& books, const LevelHistogram& hist,
                                   const LevelFamily& family, std::size_t d) {
  books.check_against(family);
  hist.check_against(family);
  double per_coord = 0.0;
  for (std::size_t m = 0; m < family.num_types(); ++m) {
    double row = 0.0;
    for (std::size_t j = 0; j < hist.row(m).size(); ++j) {
      row += hist.row(m)[j] * (books.word(m, j).length + (j > 0 ? 1.0 : 0.0));
    }
    per_coord += family.proportion(m) * row;
  }
  return static_cast<double>(kNormBits) + per_coord * static_cast<double>(d);
}

}  // namespace qoda
