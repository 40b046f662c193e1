#include "hierpool/tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "hierpool/rng.hpp"

namespace hierpool {

namespace {

Scalar gini(const std::vector<long>& counts, long total) {
  if (total == 0) return 0.0;
  Scalar sum = 0.0;
  for (long c : counts) {
    const Scalar p = static_cast<Scalar>(c) / static_cast<Scalar>(total);
    sum += p * p;
  }
  return 1.0 - sum;
}

int majority(const std::vector<long>& counts) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c)
    if (counts[c] > counts[best]) best = c;  // tie keeps the smallest class
  return best;
}

struct Split {
  int feature = -1;
  Scalar threshold = 0.0;
  Scalar gain = 0.0;
};

struct Builder {
  const Matrix& x;
  const std::vector<int>& y;
  int num_classes;
  Rng rng;
  DecisionTree tree;

  int build(std::vector<int> idx) {
    std::vector<long> counts(num_classes, 0);
    for (int i : idx) ++counts[y[i]];
    const long total = static_cast<long>(idx.size());
    const Scalar impurity = gini(counts, total);

    DecisionTree::Node node;
    node.label = majority(counts);
    const int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (total < 2 || impurity == 0.0) return self;

    // Best split per feature; impure nodes split even at zero gain so that
    // parity-style targets are still reachable. Ties are resolved by a
    // seeded pick over the pool of equal-gain candidates.
    Split best;
    best.gain = -1.0;
    std::vector<Split> tied;
    const Scalar kTieEps = 1e-12;
    std::vector<int> order(idx);
    for (int f = 0; f < x.cols(); ++f) {
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return x(a, f) < x(b, f); });
      std::vector<long> left(num_classes, 0);
      std::vector<long> right = counts;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        const int i = order[pos];
        ++left[y[i]];
        --right[y[i]];
        const Scalar cur = x(i, f);
        const Scalar next = x(order[pos + 1], f);
        if (cur == next) continue;
        const long nl = static_cast<long>(pos) + 1;
        const long nr = total - nl;
        const Scalar child = (static_cast<Scalar>(nl) * gini(left, nl) +
                              static_cast<Scalar>(nr) * gini(right, nr)) /
                             static_cast<Scalar>(total);
        const Scalar gain = impurity - child;
        if (gain > best.gain + kTieEps) {
          best = Split{f, (cur + next) / 2.0, gain};
          tied.clear();
          tied.push_back(best);
        } else if (std::abs(gain - best.gain) <= kTieEps) {
          tied.push_back(Split{f, (cur + next) / 2.0, gain});
        }
      }
    }
    if (best.feature < 0) return self;  // every feature is constant here
    const Split pick = tied[tied.size() > 1 ? rng.uniform_int(static_cast<int>(tied.size())) : 0];

    std::vector<int> left_idx, right_idx;
    for (int i : idx)
      (x(i, pick.feature) <= pick.threshold ? left_idx : right_idx).push_back(i);
    tree.nodes[self].feature = pick.feature;
    tree.nodes[self].threshold = pick.threshold;
    const int l = build(std::move(left_idx));
    tree.nodes[self].left = l;
    const int r = build(std::move(right_idx));
    tree.nodes[self].right = r;
    return self;
  }
};

}  // namespace

DecisionTree decision_tree_fit(const Matrix& x, const std::vector<int>& y, std::uint64_t seed) {
  if (x.rows() == 0) throw std::invalid_argument("decision_tree_fit: no samples");
  if (static_cast<int>(y.size()) != x.rows())
    throw std::invalid_argument("decision_tree_fit: label count != row count");
  int num_classes = 1;
  for (int label : y) {
    if (label < 0) throw std::invalid_argument("decision_tree_fit: negative label");
    num_classes = std::max(num_classes, label + 1);
  }
  Builder builder{x, y, num_classes, Rng(seed), {}};
  builder.tree.num_classes = num_classes;
  std::vector<int> idx(x.rows());
  std::iota(idx.begin(), idx.end(), 0);
  builder.build(std::move(idx));
  return builder.tree;
}

int decision_tree_predict_one(const DecisionTree& tree, const Eigen::Ref<const Matrix>& row) {
  int at = 0;
  while (!tree.nodes[at].leaf()) {
    const DecisionTree::Node& n = tree.nodes[at];
    if (n.feature >= row.cols())
      throw std::invalid_argument("decision_tree_predict: dimension mismatch");
    at = row(0, n.feature) <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[at].label;
}

std::vector<int> decision_tree_predict(const DecisionTree& tree, const Matrix& x) {
  std::vector<int> out;
  out.reserve(x.rows());
  for (int r = 0; r < x.rows(); ++r) out.push_back(decision_tree_predict_one(tree, x.row(r)));
  return out;
}

}  // namespace hierpool
