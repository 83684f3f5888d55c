/*
 * Copyright (C) 2026 The sadprof Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Portable randomness. std::mt19937_64 output is fixed by the standard but
// the std distributions are not, so bounded draws and shuffles are done here.

#ifndef SADPROF_RANDOM_HPP_
#define SADPROF_RANDOM_HPP_

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace sadprof {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for the index-th child stream of `seed`:
// splitmix64 finalizer of seed + (index + 1) * 0x9E3779B97F4A7C15.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(seed + index * 0x9E3779B97F4A7C15ULL);
}

// Unbiased integer in [0, n), n > 0.
inline std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Fisher-Yates.
template <typename T>
void Shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[UniformIndex(rng, i)]);
}

}  // namespace sadprof

#endif  // SADPROF_RANDOM_HPP_
