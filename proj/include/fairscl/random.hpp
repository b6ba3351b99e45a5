/*
 * Copyright 2026 The fairscl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FAIRSCL_RANDOM_HPP_
#define FAIRSCL_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace fairscl {

using RandomEngine = std::mt19937_64;

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (seed, index), e.g. one per bootstrap replicate.
constexpr uint64_t DeriveSeed(uint64_t seed, uint64_t index) {
  return seed ^ Mix64(index);
}

constexpr uint64_t Fnv1a64(std::string_view bytes,
                           uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Named sub-stream, e.g. DeriveSeed(seed, "init").
constexpr uint64_t DeriveSeed(uint64_t seed, std::string_view stream) {
  return DeriveSeed(seed, Fnv1a64(stream));
}

}  // namespace fairscl

#endif  // FAIRSCL_RANDOM_HPP_
