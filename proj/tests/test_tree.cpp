#include <doctest.h>

#include "hierpool/rng.hpp"
#include "hierpool/tree.hpp"

using namespace hierpool;

TEST_CASE("single threshold separates 1-D data") {
  Matrix x(6, 1);
  x << 0.1, 0.4, 0.2, 3.0, 2.7, 3.3;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const DecisionTree tree = decision_tree_fit(x, y, 1);
  CHECK(decision_tree_predict(tree, x) == y);
  CHECK(tree.nodes.size() == 3);  // root plus two leaves
}

TEST_CASE("xor of two binary features needs depth two") {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> y{0, 1, 1, 0};
  const DecisionTree tree = decision_tree_fit(x, y, 3);
  CHECK(decision_tree_predict(tree, x) == y);
}

TEST_CASE("constant labels produce a single leaf") {
  Matrix x(5, 2);
  x.setRandom();
  const DecisionTree tree = decision_tree_fit(x, {2, 2, 2, 2, 2}, 1);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].leaf());
  CHECK(decision_tree_predict(tree, x) == std::vector<int>{2, 2, 2, 2, 2});
}

TEST_CASE("prediction dimension mismatch is rejected") {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const DecisionTree tree = decision_tree_fit(x, {0, 1, 1, 0}, 3);
  Matrix narrow(1, 1);
  narrow << 0.5;
  CHECK_THROWS_AS(decision_tree_predict(tree, narrow), std::invalid_argument);
}

TEST_CASE("fit is deterministic per seed") {
  Rng rng(5);
  Matrix x(40, 3);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
    y[i] = rng.uniform_int(3);
  }
  const DecisionTree a = decision_tree_fit(x, y, 9);
  const DecisionTree b = decision_tree_fit(x, y, 9);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].feature == b.nodes[i].feature);
    CHECK(a.nodes[i].threshold == b.nodes[i].threshold);
  }
  // Unlimited depth reaches perfect training accuracy on distinct rows.
  CHECK(decision_tree_predict(a, x) == y);
}
