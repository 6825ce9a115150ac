// Copyright 2026 The resmat Authors
//
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

#ifndef RESMAT_RNG_HPP
#define RESMAT_RNG_HPP

#include <cstdint>
#include <initializer_list>

namespace resmat {

/// SplitMix64 finalizer. Used both as a seeding mixer and as the stream
/// derivation hash; the exact constants are part of the reproducibility
/// contract and must not change.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives a 64-bit stream key from a master seed and a list of labels
/// (scheme index, n0 index, replicate index, ...).
///
///   key = mix64(seed); for each label L: key = mix64(key ^ L)
///
/// Streams, not individual draws, are the portable reproducibility unit.
inline std::uint64_t derive_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> labels) {
  std::uint64_t key = mix64(seed);
  for (std::uint64_t label : labels) key = mix64(key ^ label);
  return key;
}

/// xoshiro256** generator (Blackman & Vigna), seeded through SplitMix64.
/// Self-contained so that draw sequences are bit-identical across platforms;
/// the standard library's distributions make no such guarantee.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) {
    std::uint64_t sm = key;
    for (auto& word : state_) {
      sm = mix64(sm);
      word = sm;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace resmat

#endif
