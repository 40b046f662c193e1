#include "hierpool/hyperplane.hpp"

#include <cmath>

#include "hierpool/adam.hpp"
#include "hierpool/tape.hpp"

namespace hierpool {

void HyperplaneConfig::validate() const {
  if (n_samples < 2) throw std::invalid_argument("hyperplane: n_samples must be >= 2");
  if (mix < 0.0 || mix > 1.0) throw std::invalid_argument("hyperplane: mix must lie in [0, 1]");
}

namespace {

Matrix with_ones_column(const Matrix& inputs) {
  Matrix m(inputs.rows(), inputs.cols() + 1);
  m.leftCols(inputs.cols()) = inputs;
  m.col(inputs.cols()).setOnes();
  return m;
}

}  // namespace

Matrix hyperplane_fit(const std::function<Vector(const Vector&)>& f, const Vector& x,
                      const HyperplaneConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.sigma <= 0.0) throw std::invalid_argument("hyperplane_fit: sigma must be positive");
  const int b = static_cast<int>(x.size());
  const Vector f0 = f(x);
  const int d = static_cast<int>(f0.size());

  Matrix inputs(cfg.n_samples, b);
  Matrix values(cfg.n_samples, d);
  inputs.row(0) = x.transpose();
  values.row(0) = f0.transpose();
  bool any_perturbed = false;
  for (int i = 1; i < cfg.n_samples; ++i) {
    Vector eps(b);
    for (int j = 0; j < b; ++j) eps(j) = cfg.sigma * rng.normal();
    if (eps.norm() > 0.0) any_perturbed = true;
    const Vector xi = x + eps;
    inputs.row(i) = xi.transpose();
    values.row(i) = f(xi).transpose();
  }
  if (!any_perturbed) throw std::runtime_error("hyperplane_fit: degenerate perturbations");
  if (!values.allFinite()) throw std::runtime_error("hyperplane_fit: non-finite sample value");

  const Matrix system = with_ones_column(inputs);
  return system.completeOrthogonalDecomposition().solve(values);
}

Matrix hyperplane_grad(const std::function<Vector(const Vector&)>& f, const Vector& x,
                       const HyperplaneConfig& cfg, Rng& rng) {
  return hyperplane_fit(f, x, cfg, rng).topRows(x.size());
}

Vector hyperplane_grad_times(const Matrix& inputs, const Matrix& values, const Vector& g) {
  if (values.cols() != g.size())
    throw std::invalid_argument("hyperplane_grad_times: output dimension mismatch");
  if (!values.allFinite()) throw std::runtime_error("hyperplane_grad_times: non-finite value");
  const Matrix system = with_ones_column(inputs);
  // solve(F) * g equals solve(F * g): the pseudoinverse is linear in the rhs.
  const Vector folded = values * g;
  const Vector z = system.completeOrthogonalDecomposition().solve(folded);
  return z.head(inputs.cols());
}

SmoothedResult smoothed_backward(HelpModel& model, const BatchView& batch,
                                 const PoolForwardOptions& opts, const HyperplaneConfig& cfg,
                                 Rng& rng) {
  cfg.validate();
  std::vector<int> labels = batch.labels;
  for (int y : labels)
    if (y < 0) throw std::invalid_argument("smoothed_backward: unlabeled graph in batch");

  ad::Tape tape;
  HelpForward fwd = help_forward(tape, batch, model, opts);
  ad::Var loss = ad::softmax_cross_entropy(fwd.logits, labels);
  tape.backward(loss);

  SmoothedResult out;
  out.loss = tape.value(loss)(0, 0);
  out.logits = tape.value(fwd.logits);
  out.forward_passes = 1;
  out.grads.reserve(fwd.param_vars.size());
  for (ad::Var p : fwd.param_vars) out.grads.push_back(tape.grad(p));
  if (cfg.mix == 0.0) return out;  // degenerate mix: exactly straight-through

  // dL/d(graph representation), flattened row-major like the sample outputs.
  const Matrix& repr_grad = tape.grad(fwd.graph_repr);
  const Vector g = Eigen::Map<const Vector>(repr_grad.data(), repr_grad.size());

  int param_base = 0;
  for (int s = 0; s < model.num_blocks(); ++s) {
    const Matrix& X = tape.value(fwd.block_inputs[s]);
    const int b = static_cast<int>(X.size());
    Scalar sigma = cfg.sigma;
    if (sigma <= 0.0) {
      const Scalar rms = std::sqrt(X.squaredNorm() / static_cast<Scalar>(X.size()));
      sigma = std::max(0.1 * rms, 1e-6);
    }

    Matrix inputs(cfg.n_samples, b);
    Matrix values(cfg.n_samples, g.size());
    inputs.row(0) = Eigen::Map<const Vector>(X.data(), b).transpose();
    values.row(0) =
        Eigen::Map<const Vector>(tape.value(fwd.graph_repr).data(), g.size()).transpose();
    for (int i = 1; i < cfg.n_samples; ++i) {
      Matrix Xp = X;
      for (int r = 0; r < Xp.rows(); ++r)
        for (int c = 0; c < Xp.cols(); ++c) Xp(r, c) += sigma * rng.normal();
      const Matrix repr =
          resume_from_block(model, fwd.used_models, fwd.level_views[s], Xp, s);
      out.forward_passes += 1;
      inputs.row(i) = Eigen::Map<const Vector>(Xp.data(), b).transpose();
      values.row(i) = Eigen::Map<const Vector>(repr.data(), repr.size()).transpose();
    }
    const Vector gx = hyperplane_grad_times(inputs, values, g);
    const Matrix block_grad = Eigen::Map<const Matrix>(gx.data(), X.rows(), X.cols());

    // Push the estimated input gradient through this block's (differentiable)
    // GNN stack to reach its parameters.
    ad::Tape local;
    ad::Var x0 = local.constant(fwd.level_views[s].stacked_features());
    const NormAdjacency adj = normalized_adjacency(fwd.level_views[s]);
    StackVars vars = lift(local, model.block_stacks[s]);
    ad::Var xs = stack_forward(local, adj, x0, vars, model.act_slope);
    if (!vars.layers.empty()) {
      local.backward(xs, block_grad);
      for (const auto& [w, bvar] : vars.layers) {
        const int iw = param_base;
        const int ib = param_base + 1;
        out.grads[iw] = cfg.mix * local.grad(w) + (1.0 - cfg.mix) * out.grads[iw];
        out.grads[ib] = cfg.mix * local.grad(bvar) + (1.0 - cfg.mix) * out.grads[ib];
        param_base += 2;
      }
    }
  }
  return out;
}

Scalar piecewise_plateau(Scalar x1, Scalar x2) {
  if (x1 >= 1.0) return 4.0;
  if (x2 < -1.0) return 0.2 * x1 + 1.0;
  return 0.0;
}

std::vector<DemoStep> run_demo(std::uint64_t seed) {
  Rng rng(seed);
  HyperplaneConfig cfg;
  cfg.n_samples = 20;
  cfg.sigma = 0.3;
  cfg.mix = 1.0;

  auto f = [](const Vector& x) {
    Vector out(1);
    out(0) = piecewise_plateau(x(0), x(1));
    return out;
  };

  Matrix x(1, 2);
  x(0, 0) = 2.0;
  x(0, 1) = -2.5;
  std::vector<Matrix*> params{&x};
  AdamState state = AdamState::like(params);
  AdamOptions opt;
  opt.lr = 0.1;
  opt.weight_decay = 5e-4;
  // Hyperplane gradients on this surface are zero except for rare spikes at
  // the jumps. Decoupled decay keeps x2 from creeping into the flat basin,
  // and the short second-moment horizon lets the step size recover after a
  // spike instead of crawling for the remaining steps.
  opt.decoupled_decay = true;
  opt.beta2 = 0.9;

  std::vector<DemoStep> trajectory;
  trajectory.push_back({0, x(0, 0), x(0, 1), piecewise_plateau(x(0, 0), x(0, 1))});
  for (int step = 1; step <= 1000; ++step) {
    const Vector point = x.row(0).transpose();
    const Matrix jac = hyperplane_grad(f, point, cfg, rng);  // 2 x 1
    Matrix grad(1, 2);
    grad(0, 0) = jac(0, 0);
    grad(0, 1) = jac(1, 0);
    adam_step(params, {grad}, state, opt);
    trajectory.push_back({step, x(0, 0), x(0, 1), piecewise_plateau(x(0, 0), x(0, 1))});
  }
  return trajectory;
}

}  // namespace hierpool
