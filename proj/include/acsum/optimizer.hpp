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

#ifndef ACSUM_OPTIMIZER_HPP_
#define ACSUM_OPTIMIZER_HPP_

#include <span>

#include "acsum/autodiff.hpp"

namespace acsum::train {

enum class UpdateRule {
  kAdadelta,
  kSgd,  // literal theta <- theta - lr * grad
};

struct OptimizerConfig {
  UpdateRule rule = UpdateRule::kAdadelta;
  double rho = 0.95;
  double eps = 1e-6;
};

// Elementwise Adadelta:
//   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
//   dx       = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       += lr * dx
// lr == 1 is the unscaled rule.
void adadelta_step(std::span<double> param, std::span<const double> grad,
                   std::span<double> sq_grad, std::span<double> sq_delta, double rho,
                   double eps, double lr = 1.0);

void adadelta_step(ad::Parameter& p, double rho, double eps, double lr = 1.0);

void sgd_step(ad::Parameter& p, double lr);

// Verifies every gradient is finite before touching anything, then applies
// the configured rule to each parameter.
void apply_update(std::span<ad::Parameter* const> params, const OptimizerConfig& config, double lr);

}  // namespace acsum::train

#endif  // ACSUM_OPTIMIZER_HPP_
