#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/matrix.hpp"

namespace ergnn::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Accumulated gradient; all zeros if nothing flowed into this node.
  const Matrix& grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 result.
  double item() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Ordered record of executed operations. Backward walks the records in
/// reverse execution order and accumulates gradients additively.
class Tape {
 public:
  /// Receives the tape and the id of the node being differentiated.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  /// Seeds d(output)/d(output) = 1 and runs every recorded backward step.
  /// `output` must be 1x1.
  void backward(Var output);
  void zero_grad();

  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by op implementations.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  Matrix& grad(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;  // stable addresses: values stay valid as the tape grows
};

/// Thrown when an op meets NaN or infinity where it needs finite values.
class NonFiniteValue : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Row subset used by masked losses.
using NodeSet = std::vector<std::size_t>;

NodeSet all_nodes(std::size_t n);

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// x + broadcast of the 1 x h row vector b.
Var add_row_bias(Var x, Var b);
/// x w + b.
Var linear(Var x, Var w, Var b);
Var relu(Var x);
/// Inverted dropout. Identity when !training or p == 0. Throws for p >= 1.
Var dropout(Var x, double p, std::uint64_t seed, bool training);
Var softmax_rows(Var x);
/// Constant copy: no gradient flows back through the result.
Var detach(Var x);
Var sum(Var x);

/// Mean over `mask` rows of -log softmax(logits)[label].
Var cross_entropy(Var logits, std::span<const int> labels, const NodeSet& mask);
/// Mean over `mask` rows of -sum_c target_c log softmax(logits)_c. Gradients
/// reach both arguments.
Var cross_entropy(Var logits, Var target, const NodeSet& mask);
/// Mean over the entries of `mask` rows of (pred - target)^2.
Var mse(Var pred, Var target, const NodeSet& mask);

/// m x with m held constant. `m` must outlive the tape.
Var spmm(const SparseSymMatrix& m, Var x);
/// sum_k coeffs[k] T_k(lhat) x, coeffs a 1 x (K+1) row. Backward replays the
/// recurrence on the incoming gradient (lhat is symmetric). `lhat` must
/// outlive the tape.
Var cheb_filter(const SparseSymMatrix& lhat, Var x, Var coeffs);

/// Chebyshev expansion coefficients of a 1 x (K+1) row of node values
/// (see interp_to_coeffs). The map is linear; backward applies its transpose.
Var interp_coeffs(Var node_values);

/// Softmax of one row into `out` (same length), max-subtracted.
void softmax_row(std::span<const double> in, std::span<double> out) noexcept;

}  // namespace ergnn::ad
