#include <doctest.h>

#include "hierpool/adam.hpp"

using namespace hierpool;

TEST_CASE("zero gradient and zero decay leave parameters unchanged") {
  Matrix p = Matrix::Constant(2, 2, 3.0);
  const Matrix before = p;
  std::vector<Matrix*> params{&p};
  AdamState state = AdamState::like(params);
  AdamOptions opt;
  adam_step(params, {Matrix::Zero(2, 2)}, state, opt);
  adam_step(params, {Matrix::Zero(2, 2)}, state, opt);
  CHECK(p == before);
  CHECK(state.step == 2);
}

TEST_CASE("first bias-corrected step moves by almost exactly lr") {
  Matrix p = Matrix::Constant(1, 1, 1.0);
  std::vector<Matrix*> params{&p};
  AdamState state = AdamState::like(params);
  AdamOptions opt;
  opt.lr = 0.1;
  adam_step(params, {Matrix::Constant(1, 1, 1.0)}, state, opt);
  // m_hat = v_hat = 1 after correction, so the step is lr / (1 + eps).
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("identical parameters with identical gradients stay identical") {
  Matrix a = Matrix::Constant(2, 1, 0.5);
  Matrix b = a;
  std::vector<Matrix*> params{&a, &b};
  AdamState state = AdamState::like(params);
  AdamOptions opt;
  opt.weight_decay = 5e-4;
  Matrix g = Matrix::Constant(2, 1, -0.3);
  for (int i = 0; i < 10; ++i) adam_step(params, {g, g}, state, opt);
  CHECK(a == b);
}

TEST_CASE("additive decay pulls toward zero without gradients") {
  Matrix p = Matrix::Constant(1, 1, 2.0);
  std::vector<Matrix*> params{&p};
  AdamState state = AdamState::like(params);
  AdamOptions opt;
  opt.lr = 0.1;
  opt.weight_decay = 5e-4;
  adam_step(params, {Matrix::Zero(1, 1)}, state, opt);
  CHECK(p(0, 0) < 2.0);
  CHECK(p(0, 0) == doctest::Approx(1.9).epsilon(1e-3));  // full normalized step

  Matrix q = Matrix::Constant(1, 1, 2.0);
  std::vector<Matrix*> params2{&q};
  AdamState state2 = AdamState::like(params2);
  opt.decoupled_decay = true;
  adam_step(params2, {Matrix::Zero(1, 1)}, state2, opt);
  // Decoupled shrink only: 2 * (1 - lr * decay).
  CHECK(q(0, 0) == doctest::Approx(2.0 * (1.0 - 0.1 * 5e-4)));
}

TEST_CASE("shape mismatches are rejected") {
  Matrix p = Matrix::Zero(2, 2);
  std::vector<Matrix*> params{&p};
  AdamState state = AdamState::like(params);
  AdamOptions opt;
  CHECK_THROWS_AS(adam_step(params, {Matrix::Zero(1, 2)}, state, opt), std::invalid_argument);
}
