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

#ifndef ACSUM_MODEL_HPP_
#define ACSUM_MODEL_HPP_

#include <cstdint>

#include "acsum/actor.hpp"
#include "acsum/critics.hpp"

namespace acsum::model {

// Actor (theta) and critic (phi) parameters in one store, split by prefix.
class Model {
 public:
  explicit Model(const Dims& dims)
      : dims_(dims),
        actor_(ActorParams::create(store_, dims)),
        critic_(CriticParams::create(store_, dims)) {}
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // Uniform in [-scale, scale] from a generator seeded with seed.
  void initialize(std::uint64_t seed, double scale) {
    Rng rng(seed);
    store_.initialize_uniform(rng, scale);
  }

  const Dims& dims() const { return dims_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const ActorParams& actor() const { return actor_; }
  const CriticParams& critic() const { return critic_; }

 private:
  Dims dims_;
  ParameterStore store_;
  ActorParams actor_;
  CriticParams critic_;
};

}  // namespace acsum::model

#endif  // ACSUM_MODEL_HPP_
