// Copyright 2026 The xling Authors
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

// Central finite-difference gradient oracle. This is the independent check
// for every analytic gradient in the library: it only ever runs forward
// passes of a caller-supplied closure, so it shares no code with backward().

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "xling/tensor.hpp"

namespace xling::test {

// `loss_fn` builds a fresh forward pass over `leaves` and returns the scalar
// loss. Analytic gradients are taken from each leaf's grad buffer, which the
// caller must populate (one backward pass) before calling.
//
// Returns the maximum relative error over every element of every leaf, with
// rel = |a - n| / max(|a|, |n|, floor).
inline double max_grad_rel_error(
    const std::function<double(const std::vector<xling::Tensor*>&)>& loss_fn,
    const std::vector<xling::Tensor*>& leaves, double step = 1e-3,
    double floor = 1e-2) {
  double worst = 0.0;
  for (xling::Tensor* leaf : leaves) {
    for (std::size_t i = 0; i < leaf->values.size(); ++i) {
      double saved = leaf->values[i];
      leaf->values[i] = saved + step;
      double up = loss_fn(leaves);
      leaf->values[i] = saved - step;
      double down = loss_fn(leaves);
      leaf->values[i] = saved;
      double numeric = (up - down) / (2.0 * step);
      double analytic = i < leaf->grad.size() ? leaf->grad[i] : 0.0;
      double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace xling::test
