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

#ifndef ACSUM_GRADCHECK_HPP_
#define ACSUM_GRADCHECK_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "acsum/trainer.hpp"

namespace acsum::train {

struct GradientCheck {
  std::string name;
  double max_relative_error = 0.0;
  std::map<std::string, double> parameters;  // worst relative error per parameter
  std::vector<std::string> offenders;        // parameters at or above tolerance
  bool passed() const { return offenders.empty(); }
};

struct GradientReport {
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::vector<GradientCheck> checks;
  bool passed() const;
  std::string to_json(int indent = 2) const;
};

// Finite-difference checks of the actor NLL, the discriminator cross-entropy
// and the policy-gradient surrogate on a shrunken copy of config: k_h <= 5,
// k_w <= 4, k_y <= 12, uniform init in [-1, 1], three reverse-task pairs.
GradientReport check_gradients(const TrainConfig& config, std::uint64_t seed, double tolerance);

}  // namespace acsum::train

#endif  // ACSUM_GRADCHECK_HPP_
