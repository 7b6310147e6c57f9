// Copyright 2026 The cladlab Authors
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

#include "cladlab/optimizer.hpp"

#include <cmath>

#include "cladlab/errors.hpp"

namespace cladlab {

void Adam::step(std::span<const nn::ParameterRef> params, double lr) {
  if (m_.empty()) {
    for (const nn::ParameterRef& p : params) {
      m_.emplace_back(p.values.size(), 0.0);
      v_.emplace_back(p.values.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ConsistencyError("Adam: parameter list changed between steps");
  ++t_;
  const double bias1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::span<float> theta = params[i].values;
    std::span<const float> grad = params[i].grads;
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    if (m.size() != theta.size() || grad.size() != theta.size()) {
      throw ConsistencyError("Adam: size mismatch at " + params[i].name);
    }
    for (std::size_t e = 0; e < theta.size(); ++e) {
      const double g = grad[e] + options_.weight_decay * theta[e];
      m[e] = options_.beta1 * m[e] + (1.0 - options_.beta1) * g;
      v[e] = options_.beta2 * v[e] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[e] / bias1;
      const double v_hat = v[e] / bias2;
      theta[e] = static_cast<float>(theta[e] - lr * m_hat / (std::sqrt(v_hat) + options_.eps));
    }
  }
}

}  // namespace cladlab
