#include <doctest.h>

#include "hierpool/rng.hpp"
#include "hierpool/tape.hpp"

using namespace hierpool;
using namespace hierpool::ad;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

/// Reduce to a 1x1 scalar by summing all entries.
Var sum_all(Tape& t, Var v) {
  const int rows = static_cast<int>(t.value(v).rows());
  const int cols = static_cast<int>(t.value(v).cols());
  Var ones_left = t.constant(Matrix::Ones(1, rows));
  Var ones_right = t.constant(Matrix::Ones(cols, 1));
  return matmul(matmul(ones_left, v), ones_right);
}

}  // namespace

TEST_CASE("primitive forward values") {
  Tape t;
  Matrix x(1, 1);
  x << -1.0;
  CHECK(t.value(leaky_relu(t.input(x), 0.01))(0, 0) == doctest::Approx(-0.01));

  Matrix rows(3, 1);
  rows << 2, 4, 6;
  const Matrix mean = t.value(segment_mean(t.input(rows), {0, 0, 1}, 2));
  CHECK(mean(0, 0) == doctest::Approx(3.0));
  CHECK(mean(1, 0) == doctest::Approx(6.0));

  Rng rng(3);
  const Matrix X = random_matrix(rng, 4, 4);
  const Matrix out = t.value(matmul(t.constant(Matrix::Identity(4, 4)), t.input(X)));
  CHECK((out - X).norm() == doctest::Approx(0.0));
}

TEST_CASE("backward on a linear map matches the analytic gradient") {
  Rng rng(4);
  Tape t;
  Matrix w = random_matrix(rng, 2, 3);
  Matrix x = random_matrix(rng, 3, 1);
  Var wv = t.input(w);
  Var loss = sum_all(t, matmul(wv, t.constant(x)));
  t.backward(loss);
  const Matrix expected = Matrix::Ones(2, 1) * x.transpose();  // broadcast of x
  CHECK((t.grad(wv) - expected).norm() < 1e-12);
}

TEST_CASE("constant loss yields zero gradients") {
  Tape t;
  Var x = t.input(Matrix::Ones(2, 2));
  Var loss = sum_all(t, cmul(x, t.constant(Matrix::Zero(2, 2))));
  t.backward(loss);
  CHECK(t.grad(x).norm() == 0.0);
}

TEST_CASE("two-layer net gradient matches central differences") {
  Rng rng(12);
  const Matrix w1 = random_matrix(rng, 3, 4);
  const Matrix w2 = random_matrix(rng, 4, 2);
  const Matrix x0 = random_matrix(rng, 5, 3);
  auto f = [&](Tape& t, Var in) {
    Var h = leaky_relu(matmul(in, t.constant(w1)), 0.01);
    Var logits = matmul(h, t.constant(w2));
    return softmax_cross_entropy(logits, {0, 1, 0, 1, 0});
  };
  CHECK(finite_difference_check(f, x0) < 1e-4);
}

TEST_CASE("finite differences are near-exact for polynomial losses") {
  Rng rng(13);
  const Matrix x0 = random_matrix(rng, 3, 2);
  auto linear = [&](Tape& t, Var in) { return sum_all(t, scale(in, 2.5)); };
  CHECK(finite_difference_check(linear, x0) < 1e-8);
  auto quadratic = [&](Tape& t, Var in) { return sum_all(t, cmul(in, in)); };
  CHECK(finite_difference_check(quadratic, x0) < 1e-6);
}

TEST_CASE("every primitive passes a gradient check on random shapes") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 2 + rng.uniform_int(4);
    const int cols = 1 + rng.uniform_int(4);
    const Matrix x0 = random_matrix(rng, rows, cols);
    const Matrix other = random_matrix(rng, rows, cols);
    const Matrix right = random_matrix(rng, cols, 3);
    const Matrix bias = random_matrix(rng, 1, cols);
    std::vector<int> seg(rows);
    int segs = 1 + rng.uniform_int(rows);
    for (int r = 0; r < rows; ++r) seg[r] = r < segs ? r : rng.uniform_int(segs);
    std::vector<int> gather;
    for (int i = 0; i < rows + 2; ++i) gather.push_back(rng.uniform_int(rows));
    std::vector<int> labels(rows);
    for (int r = 0; r < rows; ++r) labels[r] = rng.uniform_int(cols);

    using F = std::function<Var(Tape&, Var)>;
    const std::vector<F> ops = {
        [&](Tape& t, Var in) { return sum_all(t, matmul(in, t.constant(right))); },
        [&](Tape& t, Var in) { return sum_all(t, add(in, t.constant(other))); },
        [&](Tape& t, Var in) { return sum_all(t, add(in, t.constant(bias))); },
        [&](Tape& t, Var in) { return sum_all(t, scale(in, -1.7)); },
        [&](Tape& t, Var in) { return sum_all(t, cmul(in, t.constant(other))); },
        [&](Tape& t, Var in) { return sum_all(t, leaky_relu(in, 0.01)); },
        [&](Tape& t, Var in) { return sum_all(t, segment_sum(in, seg, segs)); },
        [&](Tape& t, Var in) { return sum_all(t, segment_mean(in, seg, segs)); },
        [&](Tape& t, Var in) { return sum_all(t, row_gather(in, gather)); },
        [&](Tape& t, Var in) { return sum_all(t, concat_rows(in, t.constant(other))); },
        [&](Tape& t, Var in) { return softmax_cross_entropy(in, labels); },
    };
    for (const F& f : ops) REQUIRE(finite_difference_check(f, x0) < 1e-4);
  }
}

TEST_CASE("segment_mean rescaled by counts equals segment_sum") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const int rows = 3 + rng.uniform_int(6);
    const Matrix x = random_matrix(rng, rows, 4);
    const int segs = 1 + rng.uniform_int(3);
    std::vector<int> ids(rows);
    for (int r = 0; r < rows; ++r) ids[r] = r < segs ? r : rng.uniform_int(segs);
    std::vector<double> counts(segs, 0);
    for (int id : ids) counts[id] += 1;

    Tape t;
    Var in = t.input(x);
    const Matrix mean = t.value(segment_mean(in, ids, segs));
    const Matrix sum = t.value(segment_sum(in, ids, segs));
    Matrix rescaled = mean;
    for (int s = 0; s < segs; ++s) rescaled.row(s) *= counts[s];
    REQUIRE((rescaled - sum).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("forward values are bit-identical across repeated runs") {
  auto run = [] {
    Rng rng(55);
    Tape t;
    Var x = t.input(random_matrix(rng, 4, 3));
    Var h = leaky_relu(matmul(x, t.constant(random_matrix(rng, 3, 3))), 0.01);
    return t.value(segment_mean(h, {0, 0, 1, 1}, 2));
  };
  const Matrix a = run();
  const Matrix b = run();
  CHECK(a == b);
}

TEST_CASE("shape and id validation") {
  Tape t;
  Var a = t.input(Matrix::Ones(2, 3));
  Var b = t.input(Matrix::Ones(3, 3));
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
  CHECK_THROWS_AS(segment_sum(a, {0, 5}, 2), std::invalid_argument);
  CHECK_THROWS_AS(segment_mean(a, {0, 0}, 2), std::invalid_argument);  // empty segment
  CHECK_THROWS_AS(softmax_cross_entropy(a, {0}), std::invalid_argument);

  Tape other;
  Var c = other.input(Matrix::Ones(2, 3));
  CHECK_THROWS_AS(add(a, c), std::invalid_argument);

  CHECK_THROWS_AS(t.backward(a), std::invalid_argument);  // non-scalar loss
}

TEST_CASE("tape is consumed by backward") {
  Tape t;
  Var x = t.input(Matrix::Ones(1, 1));
  Var loss = scale(x, 2.0);
  t.backward(loss);
  CHECK_THROWS_AS(t.backward(loss), std::logic_error);
}
