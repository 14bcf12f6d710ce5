#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ergnn/adam.hpp"
#include "ergnn/autodiff.hpp"
#include "ergnn/graph.hpp"
#include "ergnn/oracle_suite.hpp"
#include "ergnn/rng.hpp"

using namespace ergnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

/// Analytic gradients of a scalar tape function vs central differences.
GradCheckResult grad_check(std::vector<Matrix> inputs, const std::function<ad::Var(std::vector<ad::Var>&)>& f) {
  std::vector<Matrix> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.leaf(m));
    tape.backward(f(vars));
    for (auto& v : vars) analytic.push_back(v.grad());
  }
  std::vector<Matrix*> ptrs;
  for (auto& m : inputs) ptrs.push_back(&m);
  return finite_difference_check(ptrs, analytic, [&] {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.constant(m));
    return f(vars).item();
  });
}

}  // namespace

TEST_CASE("grad_close tolerance") {
  CHECK(grad_close(1.0, 1.0 + 5e-5));
  CHECK_FALSE(grad_close(1.0, 1.0 + 2e-4));
  CHECK(grad_close(0.0, 5e-9));
  CHECK_FALSE(grad_close(0.0, 5e-7));
}

TEST_CASE("linear forward examples") {
  Rng rng(1);
  const Matrix x = random_matrix(5, 3, rng);
  ad::Tape tape;
  const ad::Var out = ad::linear(tape.constant(x), tape.constant(Matrix::identity(3)), tape.constant(Matrix(1, 3)));
  CHECK(out.value() == x);

  const Matrix b = Matrix::from_rows({{0.5, -1.0}});
  const ad::Var zero_in = ad::linear(tape.constant(Matrix(4, 3)), tape.constant(random_matrix(3, 2, rng)), tape.constant(b));
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(zero_in.value()(r, 0) == 0.5);
    CHECK(zero_in.value()(r, 1) == -1.0);
  }
  CHECK_THROWS(ad::linear(tape.constant(Matrix(4, 3)), tape.constant(Matrix(2, 2)), tape.constant(Matrix(1, 2))));
}

TEST_CASE("linear gradients match finite differences") {
  Rng rng(2);
  const auto r = grad_check({random_matrix(6, 3, rng), random_matrix(3, 4, rng), random_matrix(1, 4, rng)},
                            [](auto& v) { return ad::sum(ad::linear(v[0], v[1], v[2])); });
  CHECK(r.passed());
}

TEST_CASE("relu") {
  ad::Tape tape;
  CHECK(ad::relu(tape.constant(Matrix(2, 2, -3.0))).value() == Matrix(2, 2));
  const Matrix pos = Matrix::from_rows({{1.0, 2.0}, {0.5, 3.0}});
  CHECK(ad::relu(tape.constant(pos)).value() == pos);

  Rng rng(3);
  Matrix x = random_matrix(5, 4, rng);
  for (double& v : x.data())
    if (std::abs(v) < 1e-2) v = 0.5;
  const Matrix w = random_matrix(4, 4, rng);
  const auto r = grad_check({x}, [w](auto& v) {
    return ad::sum(ad::matmul(ad::relu(v[0]), v[0].tape().constant(w)));
  });
  CHECK(r.passed());
}

TEST_CASE("dropout") {
  Rng rng(4);
  const Matrix x = random_matrix(4, 4, rng);
  ad::Tape tape;
  const ad::Var xv = tape.constant(x);
  CHECK(ad::dropout(xv, 0.0, 1, true).value() == x);
  CHECK(ad::dropout(xv, 0.5, 1, false).value() == x);
  const Matrix first = ad::dropout(xv, 0.5, 9, true).value();
  CHECK(ad::dropout(xv, 0.5, 9, true).value() == first);
  CHECK_FALSE(ad::dropout(xv, 0.5, 10, true).value() == first);
  CHECK_THROWS(ad::dropout(xv, 1.0, 1, true));

  Matrix mean(4, 4);
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    ad::Tape t;
    mean += ad::dropout(t.constant(x), 0.2, static_cast<std::uint64_t>(s), true).value();
  }
  mean *= 1.0 / trials;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(mean(i, j) - x(i, j)) <= 0.02 * std::abs(x(i, j)) + 1e-12);
}

TEST_CASE("softmax rows") {
  ad::Tape tape;
  const Matrix u = ad::softmax_rows(tape.constant(Matrix(2, 4))).value();
  for (double v : u.data()) CHECK(v == doctest::Approx(0.25));

  Rng rng(5);
  const Matrix x = random_matrix(6, 5, rng);
  Matrix shifted = x;
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 5; ++c) shifted(r, c) += 10.0 * static_cast<double>(r) - 4.0;
  const Matrix a = ad::softmax_rows(tape.constant(x)).value();
  const Matrix b = ad::softmax_rows(tape.constant(shifted)).value();
  CHECK(max_abs_diff(a, b) < 1e-14);
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) s += a(r, c);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  const Matrix big = Matrix::from_rows({{1000.0, 0.0}});
  CHECK(ad::softmax_rows(tape.constant(big)).value().all_finite());

  const Matrix w = random_matrix(5, 5, rng);
  CHECK(grad_check({x}, [w](auto& v) {
          return ad::sum(ad::matmul(ad::softmax_rows(v[0]), v[0].tape().constant(w)));
        }).passed());
}

TEST_CASE("cross entropy values") {
  ad::Tape tape;
  const std::vector<int> labels{0, 1, 2, 1};
  const ad::Var uniform = tape.constant(Matrix(4, 3));
  CHECK(ad::cross_entropy(uniform, labels, ad::all_nodes(4)).item() == doctest::Approx(std::log(3.0)));
  CHECK(ad::cross_entropy(uniform, labels, ad::all_nodes(4)).item() >= 0.0);

  Rng rng(6);
  const Matrix logits = random_matrix(4, 3, rng);
  const ad::Var lv = tape.constant(logits);
  const Matrix p = ad::softmax_rows(lv).value();
  double entropy = 0.0;
  for (double v : p.data()) entropy -= v * std::log(v);
  entropy /= 4.0;
  CHECK(ad::cross_entropy(lv, tape.constant(p), ad::all_nodes(4)).item() == doctest::Approx(entropy).epsilon(1e-12));

  CHECK_THROWS(ad::cross_entropy(lv, labels, ad::NodeSet{}));
  Matrix bad = logits;
  bad(0, 0) = NAN;
  CHECK_THROWS(ad::cross_entropy(tape.constant(bad), labels, ad::all_nodes(4)));
}

TEST_CASE("cross entropy gradient closed form") {
  Rng rng(7);
  const Matrix logits = random_matrix(5, 3, rng);
  const std::vector<int> labels{2, 0, 1, 1, 0};
  const ad::NodeSet mask{0, 2, 3};
  ad::Tape tape;
  const ad::Var lv = tape.leaf(logits);
  tape.backward(ad::cross_entropy(lv, labels, mask));
  const Matrix p = ad::softmax_rows(tape.constant(logits)).value();
  Matrix expect(5, 3);
  for (std::size_t r : mask)
    for (std::size_t c = 0; c < 3; ++c)
      expect(r, c) = (p(r, c) - (static_cast<int>(c) == labels[r] ? 1.0 : 0.0)) / 3.0;
  CHECK(max_abs_diff(lv.grad(), expect) < 1e-14);

  CHECK(grad_check({logits}, [&](auto& v) { return ad::cross_entropy(v[0], labels, mask); }).passed());
  CHECK(grad_check({logits, random_matrix(5, 3, rng)}, [&](auto& v) {
          return ad::cross_entropy(v[0], ad::softmax_rows(v[1]), mask);
        }).passed());
}

TEST_CASE("mse values and gradient") {
  Rng rng(8);
  const Matrix y = random_matrix(4, 2, rng);
  ad::Tape tape;
  CHECK(ad::mse(tape.constant(y), tape.constant(y), ad::all_nodes(4)).item() == 0.0);
  CHECK(ad::mse(tape.constant(y + Matrix(4, 2, 1.0)), tape.constant(y), ad::all_nodes(4)).item() ==
        doctest::Approx(1.0));
  CHECK_THROWS(ad::mse(tape.constant(y), tape.constant(y), ad::NodeSet{}));
  CHECK_THROWS(ad::mse(tape.constant(y), tape.constant(Matrix(4, 3)), ad::all_nodes(4)));

  const Matrix pred = random_matrix(4, 2, rng);
  const ad::NodeSet mask{1, 3};
  const ad::Var pv = tape.leaf(pred);
  tape.backward(ad::mse(pv, tape.constant(y), mask));
  Matrix expect(4, 2);
  for (std::size_t r : mask)
    for (std::size_t c = 0; c < 2; ++c) expect(r, c) = 2.0 * (pred(r, c) - y(r, c)) / 4.0;
  CHECK(max_abs_diff(pv.grad(), expect) < 1e-15);

  CHECK(grad_check({pred, y}, [&](auto& v) { return ad::mse(v[0], v[1], mask); }).passed());
}

TEST_CASE("sparse ops carry gradients into the dense operand only") {
  Rng rng(9);
  const SparseSymMatrix lhat = normalized_laplacian(erdos_renyi_graph(15, 0.3, 2)).shifted(-1.0);
  const Matrix w = random_matrix(15, 2, rng);
  CHECK(grad_check({random_matrix(15, 2, rng)}, [&](auto& v) {
          return ad::mse(ad::spmm(lhat, v[0]), v[0].tape().constant(w), ad::all_nodes(15));
        }).passed());
  CHECK(grad_check({random_matrix(15, 2, rng), random_matrix(1, 5, rng)}, [&](auto& v) {
          return ad::mse(ad::cheb_filter(lhat, v[0], v[1]), v[0].tape().constant(w), ad::all_nodes(15));
        }).passed());
}

TEST_CASE("composite chain matches hand-derived gradient") {
  // f(w) = sum(3 * (x w + b)) has df/dw = 3 x^T 1 and df/db = 3 N.
  Rng rng(10);
  const Matrix x = random_matrix(4, 3, rng);
  ad::Tape tape;
  const ad::Var w = tape.leaf(random_matrix(3, 2, rng));
  const ad::Var b = tape.leaf(Matrix(1, 2));
  tape.backward(ad::sum(ad::scale(ad::add_row_bias(ad::matmul(tape.constant(x), w), b), 3.0)));
  const Matrix expect = 3.0 * matmul(transpose(x), Matrix(4, 2, 1.0));
  CHECK(max_abs_diff(w.grad(), expect) < 1e-14);
  CHECK(b.grad() == Matrix(1, 2, 12.0));
}

TEST_CASE("gradients accumulate over reuse") {
  Rng rng(11);
  const Matrix m = random_matrix(3, 3, rng);
  ad::Tape tape;
  const ad::Var x = tape.leaf(m);
  tape.backward(ad::sum(ad::add(ad::scale(x, 2.0), ad::sub(x, ad::detach(x)))));
  CHECK(x.grad() == Matrix(3, 3, 3.0));
}

TEST_CASE("interpolation op is exact at constants and linear in its input") {
  ad::Tape tape;
  const ad::Var ones = tape.leaf(Matrix(1, 11, 1.0));
  Matrix e0(1, 11);
  e0(0, 0) = 1.0;
  CHECK(ad::interp_coeffs(ones).value() == e0);
  Rng rng(13);
  const Matrix w = random_matrix(1, 11, rng);
  CHECK(grad_check({random_matrix(1, 11, rng)}, [w](auto& v) {
          return ad::sum(ad::matmul(ad::interp_coeffs(v[0]), v[0].tape().constant(transpose(w))));
        }).passed());
}

TEST_CASE("values stay valid while the tape grows") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix(2, 2, 1.5));
  const Matrix& ref = x.value();
  for (int i = 0; i < 1000; ++i) tape.constant(Matrix(2, 2));
  CHECK(ref == Matrix(2, 2, 1.5));
}

TEST_CASE("backward needs a scalar output") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Matrix(2, 2, 1.0));
  CHECK_THROWS(tape.backward(x));
}

TEST_CASE("adam update rules") {
  Adam adam;
  AdamHyper h;
  h.lr = 0.1;
  adam.add_param(2, 2, h);
  Matrix p = Matrix::from_rows({{1.0, -2.0}, {0.5, 3.0}});
  const Matrix start = p;
  Matrix g(2, 2);
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};

  adam.step(params, grads);
  CHECK(p == start);
  CHECK(adam.steps() == 1);

  Adam fresh;
  fresh.add_param(2, 2, h);
  g = Matrix::from_rows({{0.3, -2.0}, {1e-3, -5.0}});
  fresh.step(params, grads);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const double expect = -0.1 * (g(i, j) > 0 ? 1.0 : -1.0);
      CHECK(std::abs((p(i, j) - start(i, j)) - expect) < 1e-4 * 0.1);
    }

  AdamHyper decay = h;
  decay.weight_decay = 0.5;
  Adam wd;
  wd.add_param(2, 2, decay);
  p = start;
  g = Matrix(2, 2);
  wd.step(params, grads);
  CHECK(max_abs_diff(p, (1.0 - 0.1 * 0.5) * start) < 1e-15);
  for (double v : wd.second_moment(0).data()) CHECK(v >= 0.0);
}

TEST_CASE("forward and backward are deterministic") {
  auto run = [] {
    Rng rng(12);
    const Matrix x = random_matrix(8, 4, rng);
    const Matrix w = random_matrix(4, 3, rng);
    ad::Tape tape;
    const ad::Var wv = tape.leaf(w);
    const ad::Var h = ad::dropout(ad::relu(ad::matmul(tape.constant(x), wv)), 0.3, 77, true);
    const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1};
    const ad::Var loss = ad::cross_entropy(h, labels, ad::all_nodes(8));
    tape.backward(loss);
    return std::make_pair(loss.item(), wv.grad());
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}
