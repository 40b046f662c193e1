#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hierpool/pool.hpp"
#include "hierpool/rng.hpp"

namespace hierpool {

struct HyperplaneConfig {
  int n_samples = 10;   // total evaluations including the unperturbed point
  Scalar sigma = -1.0;  // <= 0 selects 0.1 x RMS of the probed embeddings
  Scalar mix = 0.5;     // weight of the hyperplane path against straight-through

  void validate() const;
};

/// Plane fitted through f evaluated at x and n_samples-1 Gaussian
/// perturbations: the (b+1) x d coefficient block (slopes plus a constant
/// row), minimum-norm when under-determined and least-squares otherwise.
Matrix hyperplane_fit(const std::function<Vector(const Vector&)>& f, const Vector& x,
                      const HyperplaneConfig& cfg, Rng& rng);

/// Jacobian estimate [b x d] of f at x: the slope rows of hyperplane_fit.
Matrix hyperplane_grad(const std::function<Vector(const Vector&)>& f, const Vector& x,
                       const HyperplaneConfig& cfg, Rng& rng);

/// Matrix-free form used on large inputs: returns hyperplane_grad(...) * g
/// without materializing the (b+1) x d coefficient block. inputs holds the
/// sample points as rows (no ones column), values the sampled outputs.
Vector hyperplane_grad_times(const Matrix& inputs, const Matrix& values, const Vector& g);

/// Loss-level gradients with the clustering discontinuities smoothed: per
/// pool block, the [cluster -> pool -> remaining blocks -> global pool] map
/// is probed as a black box on jointly perturbed node embeddings; the
/// estimated input gradients flow back through that block's GNN stack and are
/// mixed with the straight-through gradients.
struct SmoothedResult {
  std::vector<Matrix> grads;  // aligned with parameters(model)
  Scalar loss = 0.0;
  Matrix logits;
  long forward_passes = 0;  // 1 + (n_samples - 1) * n_blocks
};

SmoothedResult smoothed_backward(HelpModel& model, const BatchView& batch,
                                 const PoolForwardOptions& opts, const HyperplaneConfig& cfg,
                                 Rng& rng);

/// Three-branch test surface used by the optimizer demonstration.
Scalar piecewise_plateau(Scalar x1, Scalar x2);

struct DemoStep {
  int step = 0;
  Scalar x1 = 0.0;
  Scalar x2 = 0.0;
  Scalar f = 0.0;
};

/// Descends piecewise_plateau from (2, -2.5) for 1000 Adam steps using pure
/// hyperplane gradients (n_samples 20, sigma 0.3, lr 0.1, decay 5e-4).
std::vector<DemoStep> run_demo(std::uint64_t seed);

}  // namespace hierpool
