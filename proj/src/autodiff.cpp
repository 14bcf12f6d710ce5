#include "ergnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ergnn/chebyshev.hpp"
#include "ergnn/rng.hpp"

namespace ergnn::ad {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

void require_same_tape(Var a, Var b, const char* op) {
  require(a.valid() && b.valid() && &a.tape() == &b.tape(), std::string(op) + ": operands on different tapes");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  require(a.same_shape(b), std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                               std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                               std::to_string(b.cols()) + ")");
}

void check_mask(const NodeSet& mask, std::size_t rows, const char* op) {
  require(!mask.empty(), std::string(op) + ": empty mask");
  for (std::size_t r : mask) require(r < rows, std::string(op) + ": mask row out of range");
}

void log_softmax_row(std::span<const double> in, std::span<double> out) noexcept {
  const double mx = *std::max_element(in.begin(), in.end());
  double z = 0.0;
  for (double v : in) z += std::exp(v - mx);
  const double lz = mx + std::log(z);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] - lz;
}

Matrix scalar(double v) { return Matrix(1, 1, v); }

}  // namespace

void softmax_row(std::span<const double> in, std::span<double> out) noexcept {
  const double mx = *std::max_element(in.begin(), in.end());
  double z = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
}

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::logic_error("Var::item: value is not 1x1");
  return v(0, 0);
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Matrix{}, requires_grad, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var v : inputs) {
    require(v.valid() && &v.tape() == this, "Tape::record: input from another tape");
    needs = needs || requires_grad(v.id());
  }
  nodes_.push_back(Node{std::move(value), Matrix{}, needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var output) {
  require(output.valid() && &output.tape() == this, "Tape::backward: output from another tape");
  const Matrix& v = value(output.id());
  require(v.rows() == 1 && v.cols() == 1, "Tape::backward: output must be 1x1");
  grad(output.id())(0, 0) += 1.0;
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    // Nodes nobody pulled a gradient into have nothing to propagate.
    if (n.backward && n.grad.same_shape(n.value)) n.backward(*this, id);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Matrix{};
}

NodeSet all_nodes(std::size_t n) {
  NodeSet s(n);
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  require(a.cols() == b.rows(), "matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(ergnn::matmul(a.value(), b.value()), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += ergnn::matmul(g, transpose(t.value(ib)));
    if (t.requires_grad(ib)) t.grad(ib) += ergnn::matmul(transpose(t.value(ia)), g);
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ib)) t.grad(ib) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.grad(ia) += g;
    if (t.requires_grad(ib)) t.grad(ib) -= g;
  });
}

Var scale(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape().record(s * a.value(), {a}, [ia, s](Tape& t, std::size_t self) {
    t.grad(ia).add_scaled(t.grad(self), s);
  });
}

Var add_row_bias(Var x, Var b) {
  require_same_tape(x, b, "add_row_bias");
  require(b.rows() == 1 && b.cols() == x.cols(), "add_row_bias: bias must be 1 x " + std::to_string(x.cols()));
  Matrix out = x.value();
  auto bias = b.value().row(0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  const std::size_t ix = x.id(), ib = b.id();
  return x.tape().record(std::move(out), {x, b}, [ix, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ix)) t.grad(ix) += g;
    if (t.requires_grad(ib)) {
      auto gb = t.grad(ib).row(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        for (std::size_t c = 0; c < gr.size(); ++c) gb[c] += gr[c];
      }
    }
  });
}

Var linear(Var x, Var w, Var b) { return add_row_bias(matmul(x, w), b); }

Var relu(Var x) {
  Matrix out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    const auto in = t.value(ix).data();
    auto gx = t.grad(ix).data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in[i] > 0.0) gx[i] += g[i];
  });
}

Var dropout(Var x, double p, std::uint64_t seed, bool training) {
  require(p >= 0.0 && p < 1.0, "dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  Rng rng(seed);
  Matrix mask(x.rows(), x.cols());
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask.data()) m = rng.uniform() < p ? 0.0 : keep_scale;
  Matrix out = x.value();
  auto od = out.data();
  auto md = mask.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= md[i];
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, mask = std::move(mask)](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    const auto m = mask.data();
    auto gx = t.grad(ix).data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * m[i];
  });
}

Var softmax_rows(Var x) {
  if (!x.value().all_finite()) throw NonFiniteValue("softmax_rows: non-finite input");
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_row(x.value().row(r), out.row(r));
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& gx = t.grad(ix);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto yr = y.row(r);
      auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
      auto gxr = gx.row(r);
      for (std::size_t c = 0; c < yr.size(); ++c) gxr[c] += yr[c] * (gr[c] - dot);
    }
  });
}

Var detach(Var x) { return x.tape().constant(x.value()); }

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.tape().record(scalar(s), {x}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad(ix).data()) v += g;
  });
}

Var cross_entropy(Var logits, std::span<const int> labels, const NodeSet& mask) {
  const Matrix& z = logits.value();
  check_mask(mask, z.rows(), "cross_entropy");
  require(labels.size() == z.rows(), "cross_entropy: one label per row required");
  if (!z.all_finite()) throw NonFiniteValue("cross_entropy: non-finite logits");
  const std::size_t classes = z.cols();
  std::vector<double> logp(classes);
  double total = 0.0;
  for (std::size_t r : mask) {
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < classes, "cross_entropy: label out of range");
    log_softmax_row(z.row(r), logp);
    total -= logp[static_cast<std::size_t>(y)];
  }
  const double inv = 1.0 / static_cast<double>(mask.size());
  const std::size_t il = logits.id();
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape().record(scalar(total * inv), {logits},
                              [il, inv, mask, ys = std::move(ys)](Tape& t, std::size_t self) {
                                const double g = t.grad(self)(0, 0) * inv;
                                const Matrix& z = t.value(il);
                                Matrix& gz = t.grad(il);
                                std::vector<double> p(z.cols());
                                for (std::size_t r : mask) {
                                  softmax_row(z.row(r), p);
                                  p[static_cast<std::size_t>(ys[r])] -= 1.0;
                                  auto gr = gz.row(r);
                                  for (std::size_t c = 0; c < p.size(); ++c) gr[c] += g * p[c];
                                }
                              });
}

Var cross_entropy(Var logits, Var target, const NodeSet& mask) {
  require_same_tape(logits, target, "cross_entropy");
  const Matrix& z = logits.value();
  const Matrix& q = target.value();
  require_same_shape(z, q, "cross_entropy");
  check_mask(mask, z.rows(), "cross_entropy");
  if (!z.all_finite()) throw NonFiniteValue("cross_entropy: non-finite logits");
  std::vector<double> logp(z.cols());
  double total = 0.0;
  for (std::size_t r : mask) {
    log_softmax_row(z.row(r), logp);
    auto qr = q.row(r);
    for (std::size_t c = 0; c < logp.size(); ++c) total -= qr[c] * logp[c];
  }
  const double inv = 1.0 / static_cast<double>(mask.size());
  const std::size_t il = logits.id(), iq = target.id();
  return logits.tape().record(scalar(total * inv), {logits, target}, [il, iq, inv, mask](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0) * inv;
    const Matrix& z = t.value(il);
    const Matrix& q = t.value(iq);
    const bool want_z = t.requires_grad(il);
    const bool want_q = t.requires_grad(iq);
    std::vector<double> logp(z.cols());
    for (std::size_t r : mask) {
      log_softmax_row(z.row(r), logp);
      auto qr = q.row(r);
      if (want_z) {
        double mass = 0.0;
        for (double v : qr) mass += v;
        auto gr = t.grad(il).row(r);
        for (std::size_t c = 0; c < logp.size(); ++c) gr[c] += g * (mass * std::exp(logp[c]) - qr[c]);
      }
      if (want_q) {
        auto gr = t.grad(iq).row(r);
        for (std::size_t c = 0; c < logp.size(); ++c) gr[c] -= g * logp[c];
      }
    }
  });
}

Var mse(Var pred, Var target, const NodeSet& mask) {
  require_same_tape(pred, target, "mse");
  const Matrix& p = pred.value();
  const Matrix& y = target.value();
  require_same_shape(p, y, "mse");
  check_mask(mask, p.rows(), "mse");
  double total = 0.0;
  for (std::size_t r : mask) {
    auto pr = p.row(r);
    auto yr = y.row(r);
    for (std::size_t c = 0; c < pr.size(); ++c) total += (pr[c] - yr[c]) * (pr[c] - yr[c]);
  }
  const double inv = 1.0 / static_cast<double>(mask.size() * p.cols());
  const std::size_t ip = pred.id(), iy = target.id();
  return pred.tape().record(scalar(total * inv), {pred, target}, [ip, iy, inv, mask](Tape& t, std::size_t self) {
    const double g = 2.0 * t.grad(self)(0, 0) * inv;
    const Matrix& p = t.value(ip);
    const Matrix& y = t.value(iy);
    const bool want_p = t.requires_grad(ip);
    const bool want_y = t.requires_grad(iy);
    for (std::size_t r : mask) {
      auto pr = p.row(r);
      auto yr = y.row(r);
      for (std::size_t c = 0; c < pr.size(); ++c) {
        const double d = g * (pr[c] - yr[c]);
        if (want_p) t.grad(ip)(r, c) += d;
        if (want_y) t.grad(iy)(r, c) -= d;
      }
    }
  });
}

Var spmm(const SparseSymMatrix& m, Var x) {
  const std::size_t ix = x.id();
  const SparseSymMatrix* mp = &m;
  return x.tape().record(ergnn::spmm(m, x.value()), {x}, [ix, mp](Tape& t, std::size_t self) {
    // m is symmetric, so m^T g = m g.
    t.grad(ix) += ergnn::spmm(*mp, t.grad(self));
  });
}

Var interp_coeffs(Var node_values) {
  require(node_values.rows() == 1 && node_values.cols() >= 1, "interp_coeffs: expected a 1 x (K+1) row");
  const auto coeffs = interp_to_coeffs(node_values.value().data());
  Matrix out(1, coeffs.size());
  std::copy(coeffs.begin(), coeffs.end(), out.data().begin());
  const std::size_t ig = node_values.id();
  return node_values.tape().record(std::move(out), {node_values}, [ig](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix m = interp_matrix(g.cols() - 1);
    t.grad(ig) += matmul(g, m);
  });
}

Var cheb_filter(const SparseSymMatrix& lhat, Var x, Var coeffs) {
  require_same_tape(x, coeffs, "cheb_filter");
  require(coeffs.rows() == 1 && coeffs.cols() >= 1, "cheb_filter: coefficients must be a 1 x (K+1) row");
  const std::size_t order = coeffs.cols() - 1;
  ChebStack stack = cheb_apply(lhat, x.value(), order);
  Matrix out = combine(stack, coeffs.value().row(0));
  const std::size_t ix = x.id(), ic = coeffs.id();
  const SparseSymMatrix* lp = &lhat;
  return x.tape().record(std::move(out), {x, coeffs},
                         [ix, ic, lp, order, stack = std::move(stack)](Tape& t, std::size_t self) {
                           const Matrix& g = t.grad(self);
                           if (t.requires_grad(ic)) {
                             auto gc = t.grad(ic).row(0);
                             for (std::size_t k = 0; k <= order; ++k) gc[k] += frobenius_dot(stack.blocks[k], g);
                           }
                           if (t.requires_grad(ix)) {
                             // T_k(lhat) is symmetric: d/dx = sum_k c_k T_k(lhat) g.
                             const ChebStack back = cheb_apply(*lp, g, order);
                             t.grad(ix) += combine(back, t.value(ic).row(0));
                           }
                         });
}

}  // namespace ergnn::ad
