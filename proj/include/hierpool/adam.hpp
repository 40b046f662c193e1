#pragma once

#include <vector>

#include "hierpool/common.hpp"

namespace hierpool {

/// First/second moment estimates per parameter plus the shared step count.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;

  static AdamState like(const std::vector<Matrix*>& params);
};

struct AdamOptions {
  Scalar lr = 1e-3;
  Scalar weight_decay = 0.0;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
  /// false: classic L2, decay * param added to the gradient.
  /// true: decoupled multiplicative shrink, param *= (1 - lr * decay).
  bool decoupled_decay = false;
};

/// One bias-corrected Adam update over a flat parameter list.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, const AdamOptions& opt);

}  // namespace hierpool
