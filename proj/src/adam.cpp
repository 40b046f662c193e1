#include "hierpool/adam.hpp"

#include <cmath>

namespace hierpool {

AdamState AdamState::like(const std::vector<Matrix*>& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Matrix* p : params) {
    s.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    s.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, const AdamOptions& opt) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  state.step += 1;
  const Scalar bc1 = 1.0 - std::pow(opt.beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 = 1.0 - std::pow(opt.beta2, static_cast<Scalar>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    Matrix g = grads[i];
    if (!opt.decoupled_decay && opt.weight_decay != 0.0) g += opt.weight_decay * p;
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g.cwiseProduct(g);
    const Matrix mhat = state.m[i] / bc1;
    const Matrix vhat = state.v[i] / bc2;
    if (opt.decoupled_decay && opt.weight_decay != 0.0) p *= (1.0 - opt.lr * opt.weight_decay);
    p -= opt.lr * (mhat.array() / (vhat.array().sqrt() + opt.eps)).matrix();
  }
}

}  // namespace hierpool
