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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qoda/error.hpp"

namespace qoda {

/// MSB-first bit packer. The last byte is zero-padded.
class BitWriter {
 public:
  void write_bit(bool bit) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  }

  /// Appends the low `count` bits of `value`, most significant first.
  void write(std::uint64_t value, unsigned count) {
    for (unsigned k = count; k-- > 0;) write_bit((value >> k) & 1u);
  }

  std::size_t bit_length() const { return bits_; }
  std::vector<std::uint8_t> take_bytes() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

/// Reads at most `bit_length` bits from a byte buffer.
class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> bytes, std::size_t bit_length)
      : bytes_(bytes), limit_(bit_length) {
    if (bytes_.size() * 8 < limit_) {
      fail(ErrorCode::kTruncatedMessage, "buffer shorter than bit length");
    }
  }

  bool read_bit() {
    if (pos_ >= limit_) fail(ErrorCode::kTruncatedMessage, "read past end");
    const bool bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return bit;
  }

  std::uint64_t read(unsigned count) {
    std::uint64_t v = 0;
    for (unsigned k = 0; k < count; ++k) v = (v << 1) | (read_bit() ? 1u : 0u);
    return v;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return limit_ - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

}  // namespace qoda
