// Copyright 2026 The Pricing Simulator Authors.
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


#ifndef PRICING_RNG_HPP_
#define PRICING_RNG_HPP_

#include <cstdint>
#include <random>

namespace pricing {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the session with the given ordinal under a master seed:
// mix64(master ^ mix64(ordinal)). Distinct ordinals give distinct seeds since
// mix64 is a bijection.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::uint64_t ordinal) {
  return mix64(master ^ mix64(ordinal));
}

// mt19937_64 with hand-rolled draws, so sequences do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), n >= 1. Lemire's multiply-and-reject.
  std::uint32_t below(std::uint32_t n) {
    std::uint64_t x = engine_() >> 32;
    std::uint64_t m = x * n;
    auto low = static_cast<std::uint32_t>(m);
    if (low < n) {
      const std::uint32_t threshold = (0u - n) % n;
      while (low < threshold) {
        x = engine_() >> 32;
        m = x * n;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  // Index drawn from a discrete distribution given by its weights. A single
  // weight consumes no randomness.
  template <typename Weights>
  std::size_t categorical(const Weights& weights) {
    if (weights.size() == 1) return 0;
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      acc += weights[k];
      if (u < acc) return k;
    }
    return weights.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pricing

#endif  // PRICING_RNG_HPP_
