#include "hierpool/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace hierpool::ad {

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: var does not belong to this tape");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(v));
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, grad_enabled_});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::emplace(Matrix value, const std::vector<Var>& parents,
                  std::function<void(Tape&)> pull) {
  bool needs = false;
  for (Var p : parents) needs = needs || node(p).needs_grad;
  needs = needs && grad_enabled_;
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs;
  if (needs) n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.size() == 0) {
    // Lazily materialize a zero gradient for nodes the reverse pass never
    // reached.
    const_cast<Node&>(n).grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var scalar_loss) {
  const Node& n = node(scalar_loss);
  if (n.value.rows() != 1 || n.value.cols() != 1)
    throw std::invalid_argument("backward: loss must be 1x1, got " +
                                std::to_string(n.value.rows()) + "x" +
                                std::to_string(n.value.cols()));
  backward(scalar_loss, Matrix::Ones(1, 1));
}

void Tape::backward(Var v, const Matrix& seed) {
  if (!grad_enabled_) throw std::logic_error("backward: tape recorded without gradients");
  if (consumed_) throw std::logic_error("backward: tape already consumed");
  Node& out = node(v);
  if (!out.needs_grad)
    throw std::invalid_argument("backward: output does not depend on any input leaf");
  if (seed.rows() != out.value.rows() || seed.cols() != out.value.cols())
    throw std::invalid_argument("backward: seed shape mismatch");
  consumed_ = true;
  out.grad = seed;
  for (int i = v.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.pull) continue;
    if (n.grad.size() == 0) continue;  // never reached from the output
    n.pull(*this);
  }
}

namespace {

void check_same_tape(Var a, Var b) {
  if (a.tape == nullptr || b.tape == nullptr || a.tape != b.tape)
    throw std::invalid_argument("tape: operands from different or detached tapes");
}

void check_attached(Var a) {
  if (a.tape == nullptr || a.id < 0) throw std::invalid_argument("tape: detached operand");
}

/// Adds g into the gradient slot of node id, materializing it on demand.
void accumulate(Tape& t, int id, const Matrix& g) {
  Matrix& slot = t.grad_ref(id);
  if (slot.size() == 0)
    slot = g;
  else
    slot += g;
}

using Pull = std::function<void(Tape&, int)>;

/// emplace() cannot hand the closure its own node id; patch it in afterwards.
Var record(Tape& t, Matrix value, const std::vector<Var>& parents, Pull pull) {
  struct Shared {
    Pull pull;
    int self = -1;
  };
  auto shared = std::make_shared<Shared>(Shared{std::move(pull), -1});
  Var v = t.emplace(std::move(value), parents,
                    [shared](Tape& tp) { shared->pull(tp, shared->self); });
  shared->self = v.id;
  return v;
}

void check_ids(const std::vector<int>& ids, int rows, int num_segments, const char* who) {
  if (static_cast<int>(ids.size()) != rows)
    throw std::invalid_argument(std::string(who) + ": id count != row count");
  for (int id : ids)
    if (id < 0 || id >= num_segments)
      throw std::invalid_argument(std::string(who) + ": segment id out of range");
}

}  // namespace

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols() != B.rows())
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(A.cols()) +
                                " vs " + std::to_string(B.rows()));
  Matrix out = A * B;
  const int ia = a.id, ib = b.id;
  const bool wa = t.needs_grad(a), wb = t.needs_grad(b);
  return record(t, std::move(out), {a, b}, [ia, ib, wa, wb](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    if (wa) accumulate(tp, ia, Matrix(G * tp.value(Var{&tp, ib}).transpose()));
    if (wb) accumulate(tp, ib, Matrix(tp.value(Var{&tp, ia}).transpose() * G));
  });
}

Var add(Var a, Var b) {
  check_same_tape(a, b);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  const bool broadcast = (B.rows() == 1 && A.rows() != 1 && B.cols() == A.cols());
  if (!broadcast && (A.rows() != B.rows() || A.cols() != B.cols()))
    throw std::invalid_argument("add: shape mismatch");
  Matrix out = broadcast ? Matrix(A.rowwise() + B.row(0)) : Matrix(A + B);
  const int ia = a.id, ib = b.id;
  const bool wa = t.needs_grad(a), wb = t.needs_grad(b);
  return record(t, std::move(out), {a, b}, [ia, ib, wa, wb, broadcast](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    if (wa) accumulate(tp, ia, G);
    if (wb) accumulate(tp, ib, broadcast ? Matrix(G.colwise().sum()) : G);
  });
}

Var scale(Var a, Scalar s) {
  check_attached(a);
  Tape& t = *a.tape;
  Matrix out = t.value(a) * s;
  const int ia = a.id;
  return record(t, std::move(out), {a}, [ia, s](Tape& tp, int self) {
    accumulate(tp, ia, Matrix(tp.grad_ref(self) * s));
  });
}

Var cmul(Var a, Var b) {
  check_same_tape(a, b);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw std::invalid_argument("cmul: shape mismatch");
  Matrix out = A.cwiseProduct(B);
  const int ia = a.id, ib = b.id;
  const bool wa = t.needs_grad(a), wb = t.needs_grad(b);
  return record(t, std::move(out), {a, b}, [ia, ib, wa, wb](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    if (wa) accumulate(tp, ia, Matrix(G.cwiseProduct(tp.value(Var{&tp, ib}))));
    if (wb) accumulate(tp, ib, Matrix(G.cwiseProduct(tp.value(Var{&tp, ia}))));
  });
}

Var leaky_relu(Var a, Scalar slope) {
  check_attached(a);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  Matrix out = A.unaryExpr([slope](Scalar x) { return x > 0 ? x : slope * x; });
  const int ia = a.id;
  return record(t, std::move(out), {a}, [ia, slope](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    const Matrix& A = tp.value(Var{&tp, ia});
    Matrix dA = G.binaryExpr(A, [slope](Scalar g, Scalar x) { return x > 0 ? g : slope * g; });
    accumulate(tp, ia, dA);
  });
}

Var segment_sum(Var a, std::vector<int> ids, int num_segments) {
  check_attached(a);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  check_ids(ids, static_cast<int>(A.rows()), num_segments, "segment_sum");
  Matrix out = Matrix::Zero(num_segments, A.cols());
  for (int r = 0; r < A.rows(); ++r) out.row(ids[r]) += A.row(r);
  const int ia = a.id;
  auto ids_ptr = std::make_shared<std::vector<int>>(std::move(ids));
  return record(t, std::move(out), {a}, [ia, ids_ptr](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    Matrix dA(static_cast<int>(ids_ptr->size()), G.cols());
    for (std::size_t r = 0; r < ids_ptr->size(); ++r) dA.row(r) = G.row((*ids_ptr)[r]);
    accumulate(tp, ia, dA);
  });
}

Var segment_mean(Var a, std::vector<int> ids, int num_segments) {
  check_attached(a);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  check_ids(ids, static_cast<int>(A.rows()), num_segments, "segment_mean");
  std::vector<Scalar> count(num_segments, 0.0);
  for (int id : ids) count[id] += 1.0;
  for (int s = 0; s < num_segments; ++s)
    if (count[s] == 0.0) throw std::invalid_argument("segment_mean: empty segment");
  Matrix out = Matrix::Zero(num_segments, A.cols());
  for (int r = 0; r < A.rows(); ++r) out.row(ids[r]) += A.row(r);
  for (int s = 0; s < num_segments; ++s) out.row(s) /= count[s];
  const int ia = a.id;
  auto ids_ptr = std::make_shared<std::vector<int>>(std::move(ids));
  auto count_ptr = std::make_shared<std::vector<Scalar>>(std::move(count));
  return record(t, std::move(out), {a}, [ia, ids_ptr, count_ptr](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    Matrix dA(static_cast<int>(ids_ptr->size()), G.cols());
    for (std::size_t r = 0; r < ids_ptr->size(); ++r) {
      const int s = (*ids_ptr)[r];
      dA.row(r) = G.row(s) / (*count_ptr)[s];
    }
    accumulate(tp, ia, dA);
  });
}

Var row_gather(Var a, std::vector<int> ids) {
  check_attached(a);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  for (int id : ids)
    if (id < 0 || id >= A.rows()) throw std::invalid_argument("row_gather: row id out of range");
  Matrix out(static_cast<int>(ids.size()), A.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.row(static_cast<int>(r)) = A.row(ids[r]);
  const int ia = a.id;
  const int rows_a = static_cast<int>(A.rows());
  auto ids_ptr = std::make_shared<std::vector<int>>(std::move(ids));
  return record(t, std::move(out), {a}, [ia, rows_a, ids_ptr](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    Matrix dA = Matrix::Zero(rows_a, G.cols());
    for (std::size_t r = 0; r < ids_ptr->size(); ++r)
      dA.row((*ids_ptr)[r]) += G.row(static_cast<int>(r));
    accumulate(tp, ia, dA);
  });
}

Var concat_rows(Var a, Var b) {
  check_same_tape(a, b);
  Tape& t = *a.tape;
  const Matrix& A = t.value(a);
  const Matrix& B = t.value(b);
  if (A.cols() != B.cols()) throw std::invalid_argument("concat_rows: column mismatch");
  Matrix out(A.rows() + B.rows(), A.cols());
  out.topRows(A.rows()) = A;
  out.bottomRows(B.rows()) = B;
  const int ia = a.id, ib = b.id;
  const int ra = static_cast<int>(A.rows()), rb = static_cast<int>(B.rows());
  const bool wa = t.needs_grad(a), wb = t.needs_grad(b);
  return record(t, std::move(out), {a, b}, [ia, ib, ra, rb, wa, wb](Tape& tp, int self) {
    const Matrix& G = tp.grad_ref(self);
    if (wa) accumulate(tp, ia, Matrix(G.topRows(ra)));
    if (wb) accumulate(tp, ib, Matrix(G.bottomRows(rb)));
  });
}

Var softmax_cross_entropy(Var logits, std::vector<int> labels) {
  check_attached(logits);
  Tape& t = *logits.tape;
  const Matrix& Z = t.value(logits);
  const int n = static_cast<int>(Z.rows());
  const int c = static_cast<int>(Z.cols());
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy: label count != row count");
  for (int y : labels)
    if (y < 0 || y >= c) throw std::invalid_argument("softmax_cross_entropy: label out of range");

  Matrix prob(n, c);
  Scalar loss = 0.0;
  for (int r = 0; r < n; ++r) {
    const Scalar m = Z.row(r).maxCoeff();
    Eigen::RowVectorXd e = (Z.row(r).array() - m).exp();
    const Scalar s = e.sum();
    prob.row(r) = e / s;
    loss -= (Z(r, labels[r]) - m) - std::log(s);
  }
  loss /= static_cast<Scalar>(n);

  Matrix out(1, 1);
  out(0, 0) = loss;
  const int il = logits.id;
  auto labels_ptr = std::make_shared<std::vector<int>>(std::move(labels));
  auto prob_ptr = std::make_shared<Matrix>(std::move(prob));
  return record(t, std::move(out), {logits}, [il, labels_ptr, prob_ptr, n](Tape& tp, int self) {
    const Scalar g = tp.grad_ref(self)(0, 0);
    Matrix dZ = *prob_ptr;
    for (int r = 0; r < n; ++r) dZ(r, (*labels_ptr)[r]) -= 1.0;
    dZ *= g / static_cast<Scalar>(n);
    accumulate(tp, il, dZ);
  });
}

double finite_difference_check(const std::function<Var(Tape&, Var)>& f, const Matrix& x,
                               double h) {
  Matrix analytic;
  {
    Tape t;
    Var in = t.input(x);
    Var loss = f(t, in);
    t.backward(loss);
    analytic = t.grad(in);
  }
  auto eval = [&](const Matrix& p) {
    Tape t(false);
    Var in = t.input(p);
    Var loss = f(t, in);
    return t.value(loss)(0, 0);
  };
  double worst = 0.0;
  Matrix p = x;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      const Scalar orig = p(i, j);
      p(i, j) = orig + h;
      const double up = eval(p);
      p(i, j) = orig - h;
      const double down = eval(p);
      p(i, j) = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic(i, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1.0});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace hierpool::ad
