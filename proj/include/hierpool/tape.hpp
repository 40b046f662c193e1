#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "hierpool/common.hpp"

namespace hierpool::ad {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

/// Reverse-mode tape over dense row-major matrices. Nodes are recorded in
/// topological (creation) order; backward() walks them once in reverse.
/// A tape is single-owner for one forward/backward pass.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient (data, fixed coefficients).
  Var constant(Matrix value);
  /// Differentiable leaf (parameters, probe inputs).
  Var input(Matrix value);

  const Matrix& value(Var v) const { return node(v).value; }
  /// Valid after backward(); zero matrix for untouched nodes.
  const Matrix& grad(Var v) const;

  /// Reverse pass from a 1x1 loss. The tape is consumed: a second call throws.
  void backward(Var scalar_loss);
  /// Reverse pass seeded with an explicit output gradient.
  void backward(Var v, const Matrix& seed);

  bool grad_enabled() const { return grad_enabled_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Used by the primitive free functions below.
  Var emplace(Matrix value, const std::vector<Var>& parents,
              std::function<void(Tape&)> pull);
  Matrix& grad_ref(int id) { return nodes_[id].grad; }
  bool needs_grad(Var v) const { return node(v).needs_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> pull;
    bool needs_grad = false;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::deque<Node> nodes_;  // deque: value()/grad() references stay valid as nodes append
  bool grad_enabled_;
  bool consumed_ = false;
};

// ---- Primitive operations -------------------------------------------------
// The closed set used by the models: everything differentiable in the
// pipeline is built from these.

Var matmul(Var a, Var b);
/// Same-shape addition, or row-broadcast when b is 1 x d.
Var add(Var a, Var b);
Var scale(Var a, Scalar s);
/// Elementwise product.
Var cmul(Var a, Var b);
Var leaky_relu(Var a, Scalar slope);
/// Sums rows with equal segment id; ids[i] in [0, num_segments).
Var segment_sum(Var a, std::vector<int> ids, int num_segments);
/// Mean of rows per segment; every segment must be non-empty.
Var segment_mean(Var a, std::vector<int> ids, int num_segments);
Var row_gather(Var a, std::vector<int> ids);
Var concat_rows(Var a, Var b);
/// Mean softmax cross-entropy over rows; returns a 1x1 loss.
Var softmax_cross_entropy(Var logits, std::vector<int> labels);

/// f builds a scalar from one differentiable input leaf. Returns the largest
/// coordinatewise deviation between backward() and central differences,
/// relative to max(|analytic|, |numeric|, 1).
double finite_difference_check(const std::function<Var(Tape&, Var)>& f, const Matrix& x,
                               double h = 1e-4);

}  // namespace hierpool::ad
