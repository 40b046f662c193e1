#include <doctest.h>

#include "hierpool/gnn.hpp"
#include "hierpool/rng.hpp"
#include "hierpool/tape.hpp"
#include "fd_params.hpp"
#include "oracles.hpp"

using namespace hierpool;

namespace {

Graph cycle(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < n; ++v) edges.emplace_back(v, (v + 1) % n);
  return build_graph(std::move(edges), Matrix::Ones(n, 1));
}

Graph two_triangles() {
  return build_graph({{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}}, Matrix::Ones(6, 1));
}

Graph permuted(const Graph& g, const std::vector<int>& perm) {
  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edges) edges.emplace_back(perm[u], perm[v]);
  Matrix features(g.num_nodes, g.features.cols());
  for (int v = 0; v < g.num_nodes; ++v) features.row(perm[v]) = g.features.row(v);
  return build_graph(std::move(edges), std::move(features), g.label);
}

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("gcn_forward on an isolated node applies only the self loop") {
  Rng rng(1);
  const Graph g = build_graph({}, random_matrix(rng, 1, 3));
  const BatchView batch = make_batch({g});
  const NormAdjacency adj = normalized_adjacency(batch);
  const Matrix w = random_matrix(rng, 3, 2);
  const Matrix b = random_matrix(rng, 1, 2);

  ad::Tape t;
  ad::Var out = gcn_forward(t, adj, t.constant(g.features), t.input(w), t.input(b), 0.01);
  Matrix expected = g.features * w + b;
  expected = expected.unaryExpr([](Scalar x) { return x > 0 ? x : 0.01 * x; });
  CHECK((t.value(out) - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("gcn_forward zero features and bias give zero output") {
  const Graph g = build_graph({{0, 1}}, Matrix::Zero(2, 3));
  const BatchView batch = make_batch({g});
  ad::Tape t;
  ad::Var out = gcn_forward(t, normalized_adjacency(batch), t.constant(g.features),
                            t.input(Matrix::Ones(3, 3)), t.input(Matrix::Zero(1, 3)), 0.01);
  CHECK(t.value(out).norm() == 0.0);
}

TEST_CASE("gcn_forward single edge: symmetric normalization averages the two nodes") {
  Rng rng(2);
  Matrix x = random_matrix(rng, 2, 2);
  const Graph g = build_graph({{0, 1}}, x);
  const BatchView batch = make_batch({g});
  ad::Tape t;
  // Identity weight, zero bias, slope 1 keeps the activation linear.
  ad::Var out = gcn_forward(t, normalized_adjacency(batch), t.constant(x),
                            t.input(Matrix::Identity(2, 2)), t.input(Matrix::Zero(1, 2)), 1.0);
  Matrix expected(2, 2);
  expected.row(0) = 0.5 * x.row(0) + 0.5 * x.row(1);
  expected.row(1) = 0.5 * x.row(0) + 0.5 * x.row(1);
  CHECK((t.value(out) - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("stack_forward composes layers") {
  Rng rng(3);
  const Graph g = build_graph({{0, 1}, {1, 2}}, random_matrix(rng, 3, 2));
  const BatchView batch = make_batch({g});
  const NormAdjacency adj = normalized_adjacency(batch);

  SUBCASE("empty stack is the identity") {
    ad::Tape t;
    StackVars vars;
    ad::Var out = stack_forward(t, adj, t.constant(g.features), vars, 0.01);
    CHECK(t.value(out) == g.features);
  }

  SUBCASE("depth one equals gcn_forward") {
    const GnnStack stack = make_stack(2, {4}, 5);
    ad::Tape t;
    ad::Var x = t.constant(g.features);
    ad::Var a = stack_forward(t, adj, x, lift(t, stack), 0.01);
    ad::Var b = gcn_forward(t, adj, x, t.input(stack.layers[0].weight),
                            t.input(stack.layers[0].bias), 0.01);
    CHECK(t.value(a) == t.value(b));
  }

  SUBCASE("depth two matches manual composition") {
    const GnnStack stack = make_stack(2, {4, 3}, 6);
    ad::Tape t;
    ad::Var x = t.constant(g.features);
    ad::Var out = stack_forward(t, adj, x, lift(t, stack), 0.01);
    ad::Var h = gcn_forward(t, adj, x, t.input(stack.layers[0].weight),
                            t.input(stack.layers[0].bias), 0.01);
    ad::Var manual = gcn_forward(t, adj, h, t.input(stack.layers[1].weight),
                                 t.input(stack.layers[1].bias), 0.01);
    CHECK(t.value(out) == t.value(manual));
  }
}

TEST_CASE("global_sum_pool") {
  Rng rng(4);
  const Matrix x = random_matrix(rng, 4, 3);
  ad::Tape t;

  SUBCASE("single graph gives column sums") {
    ad::Var pooled = global_sum_pool(t.input(x), {0, 0, 0, 0}, 1);
    CHECK((t.value(pooled) - Matrix(x.colwise().sum())).lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SUBCASE("interleaved ids match manual grouping") {
    ad::Var pooled = global_sum_pool(t.input(x), {0, 1, 0, 1}, 2);
    Matrix expected(2, 3);
    expected.row(0) = x.row(0) + x.row(2);
    expected.row(1) = x.row(1) + x.row(3);
    CHECK((t.value(pooled) - expected).lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SUBCASE("empty feature dimension and id gaps are rejected") {
    CHECK_THROWS_AS(global_sum_pool(t.input(Matrix(2, 0)), {0, 0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(global_sum_pool(t.input(x), {0, 0, 2, 2}, 3), std::invalid_argument);
  }
}

TEST_CASE("head_forward") {
  ad::Tape t;
  Matrix bias(1, 2);
  bias << 0.3, -0.7;

  SUBCASE("zero input returns the bias") {
    ad::Var logits = head_forward(t, t.constant(Matrix::Zero(1, 3)),
                                  t.input(Matrix::Ones(3, 2)), t.input(bias));
    CHECK((t.value(logits) - bias).norm() == 0.0);
  }

  SUBCASE("identity weight keeps the larger coordinate in front") {
    Matrix pooled(1, 2);
    pooled << 0.2, 1.5;
    ad::Var logits = head_forward(t, t.constant(pooled), t.input(Matrix::Identity(2, 2)),
                                  t.input(Matrix::Zero(1, 2)));
    CHECK(t.value(logits)(0, 1) > t.value(logits)(0, 0));
  }

  SUBCASE("one-hot input selects a weight row") {
    Rng rng(5);
    const Matrix w = random_matrix(rng, 3, 2);
    Matrix onehot = Matrix::Zero(1, 3);
    onehot(0, 1) = 1.0;
    ad::Var logits =
        head_forward(t, t.constant(onehot), t.input(w), t.input(Matrix::Zero(1, 2)));
    CHECK((t.value(logits) - Matrix(w.row(1))).norm() == 0.0);
  }
}

TEST_CASE("baseline cannot separate the 1-WL-equivalent pair") {
  const GcnBaseline model = make_baseline({8, 8, 4}, 1, 2, 42);
  ad::Tape t(false);
  const BaselineForward hex = baseline_forward(t, make_batch({cycle(6)}), model);
  const BaselineForward tri = baseline_forward(t, make_batch({two_triangles()}), model);
  CHECK((t.value(hex.logits) - t.value(tri.logits)).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("baseline logits are permutation invariant") {
  Rng rng(6);
  const GcnBaseline model = make_baseline({8, 4}, 1, 3, 7);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = oracle::random_graph(rng, 9, 0.3, 0);
    std::vector<int> perm(g.num_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = g.num_nodes - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    const Graph h = permuted(g, perm);

    ad::Tape t(false);
    const Matrix a = t.value(baseline_forward(t, make_batch({g}), model).logits);
    const Matrix b = t.value(baseline_forward(t, make_batch({h}), model).logits);
    REQUIRE((a - b).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("baseline gradients pass the finite-difference oracle") {
  Rng rng(8);
  GcnBaseline model = make_baseline({5, 3}, 2, 2, 11);
  const Graph g1 = oracle::random_graph(rng, 6, 0.4, 0);
  const Graph g2 = oracle::random_graph(rng, 5, 0.4, 0);
  std::vector<Graph> graphs;
  for (const Graph* g : {&g1, &g2}) {
    Graph copy = *g;
    copy.features = random_matrix(rng, g->num_nodes, 2);
    copy.label = rng.uniform_int(2);
    graphs.push_back(copy);
  }
  const BatchView batch = make_batch(graphs);

  // Analytic gradients.
  ad::Tape tape;
  const BaselineForward fwd = baseline_forward(tape, batch, model);
  ad::Var loss = ad::softmax_cross_entropy(fwd.logits, batch.labels);
  tape.backward(loss);
  std::vector<Matrix> grads;
  for (ad::Var p : fwd.param_vars) grads.push_back(tape.grad(p));

  // Central differences over every parameter entry.
  auto eval = [&]() {
    ad::Tape t(false);
    const BaselineForward f = baseline_forward(t, batch, model);
    return t.value(ad::softmax_cross_entropy(f.logits, batch.labels))(0, 0);
  };
  CHECK(testutil::fd_params_worst_error(parameters(model), grads, eval) < 1e-4);
}
