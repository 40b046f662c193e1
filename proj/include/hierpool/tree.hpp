#pragma once

#include <cstdint>
#include <vector>

#include "hierpool/common.hpp"

namespace hierpool {

/// CART classifier: Gini impurity, axis-aligned thresholds, grown until
/// leaves are pure or hold fewer than two samples. Equal-gain splits are
/// broken by a seeded draw.
struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    Scalar threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;

    bool leaf() const { return feature < 0; }
  };
  std::vector<Node> nodes;
  int num_classes = 0;
};

DecisionTree decision_tree_fit(const Matrix& x, const std::vector<int>& y, std::uint64_t seed);

int decision_tree_predict_one(const DecisionTree& tree, const Eigen::Ref<const Matrix>& row);
std::vector<int> decision_tree_predict(const DecisionTree& tree, const Matrix& x);

}  // namespace hierpool
