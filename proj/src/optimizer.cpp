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

#include "acsum/optimizer.hpp"

#include <cmath>

#include "acsum/error.hpp"

namespace acsum::train {

void adadelta_step(std::span<double> param, std::span<const double> grad,
                   std::span<double> sq_grad, std::span<double> sq_delta, double rho, double eps,
                   double lr) {
  if (grad.size() != param.size() || sq_grad.size() != param.size() ||
      sq_delta.size() != param.size()) {
    fail(ErrorKind::kInvalidArgument, "adadelta_step: shape mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) fail(ErrorKind::kNumerical, "adadelta_step: non-finite gradient");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    sq_grad[i] = rho * sq_grad[i] + (1.0 - rho) * g * g;
    const double delta = -std::sqrt(sq_delta[i] + eps) / std::sqrt(sq_grad[i] + eps) * g;
    sq_delta[i] = rho * sq_delta[i] + (1.0 - rho) * delta * delta;
    param[i] += lr * delta;
  }
}

void adadelta_step(ad::Parameter& p, double rho, double eps, double lr) {
  adadelta_step(p.value.data, p.grad.data, p.first_moment.data, p.second_moment.data, rho, eps, lr);
}

void sgd_step(ad::Parameter& p, double lr) {
  for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
}

void apply_update(std::span<ad::Parameter* const> params, const OptimizerConfig& config, double lr) {
  for (const ad::Parameter* p : params) {
    if (!p->grad.all_finite()) {
      fail(ErrorKind::kNumerical, "non-finite gradient in parameter " + p->name);
    }
  }
  for (ad::Parameter* p : params) {
    if (config.rule == UpdateRule::kAdadelta) {
      adadelta_step(*p, config.rho, config.eps, lr);
    } else {
      sgd_step(*p, lr);
    }
  }
}

}  // namespace acsum::train
