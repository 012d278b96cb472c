// Copyright 2026 The acsum Authors.
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

#ifndef ACSUM_RANDOM_HPP_
#define ACSUM_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace acsum {

// Portable pseudo-random source. Only the raw mt19937_64 output is used, so
// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Draws an index from an unnormalized nonnegative weight vector.
  std::size_t categorical(std::span<const double> weights);

  std::string state() const;
  void set_state(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// Deterministically mixes a base seed with a stream label.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace acsum

#endif  // ACSUM_RANDOM_HPP_
