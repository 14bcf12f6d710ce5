#include <cmath>

#include "doctest.h"
#include "ergnn/graph.hpp"
#include "ergnn/rng.hpp"
#include "ergnn/spectral.hpp"

using namespace ergnn;

namespace {

Matrix random_signal(std::size_t n, std::size_t d, Rng& rng) {
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
  return x;
}

SparseSymMatrix p2_laplacian() {
  const EdgeList e{{0, 1}};
  return normalized_laplacian(build_graph(e, 2));
}

}  // namespace

TEST_CASE("identity matrix has unit spectrum") {
  const auto d = eigendecompose(SparseSymMatrix::identity(6));
  for (double lambda : d.eigenvalues) CHECK(lambda == doctest::Approx(1.0));
}

TEST_CASE("P2 laplacian eigenpairs") {
  const auto d = eigendecompose(p2_laplacian());
  CHECK(std::abs(d.eigenvalues[0]) < 1e-12);
  CHECK(std::abs(d.eigenvalues[1] - 2.0) < 1e-12);
  const double s = 1.0 / std::sqrt(2.0);
  // Signs are arbitrary, so compare up to sign.
  CHECK(std::abs(std::abs(s * d.eigenvectors(0, 0) + s * d.eigenvectors(1, 0)) - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(s * d.eigenvectors(0, 1) - s * d.eigenvectors(1, 1)) - 1.0) < 1e-12);
}

TEST_CASE("random symmetric matrix residuals and reconstruction") {
  Rng rng(3);
  Matrix a = random_signal(50, 50, rng);
  a = a + transpose(a);
  const auto d = eigendecompose_dense(a);
  const Matrix av = matmul(a, d.eigenvectors);
  for (std::size_t k = 0; k < 50; ++k)
    for (std::size_t i = 0; i < 50; ++i)
      CHECK(std::abs(av(i, k) - d.eigenvalues[k] * d.eigenvectors(i, k)) < 1e-8);
  CHECK(max_abs_diff(reconstruct(d), a) < 1e-9);
  CHECK(std::is_sorted(d.eigenvalues.begin(), d.eigenvalues.end()));
}

TEST_CASE("eigensolver refuses oversized input") {
  EigenOptions opts;
  opts.dense_limit = 4;
  CHECK_THROWS_AS(eigendecompose(SparseSymMatrix::identity(5), opts), EigenError);
}

TEST_CASE("target filter values") {
  CHECK(target_filter_eval(FilterKind::Low, 0.0) == 1.0);
  CHECK(target_filter_eval(FilterKind::High, 0.0) == 0.0);
  CHECK(target_filter_eval(FilterKind::Band, 1.0) == 1.0);
  CHECK(target_filter_eval(FilterKind::Reject, 1.0) == 0.0);
  CHECK(std::abs(target_filter_eval(FilterKind::Comb, 1.0)) < 1e-15);
  CHECK(target_filter_eval(FilterKind::Comb, 0.5) == doctest::Approx(1.0));
  CHECK(target_filter_eval(FilterKind::Low, 0.5) == doctest::Approx(std::exp(-2.5)));
  for (FilterKind k : kAllFilterKinds) CHECK(parse_filter_kind(to_string(k)) == k);
  CHECK_THROWS(parse_filter_kind("notch"));
}

TEST_CASE("exact filter examples") {
  const SparseSymMatrix l = p2_laplacian();
  const auto d = eigendecompose(l);
  const Matrix x = Matrix::from_rows({{1}, {0}});

  const auto one = TargetFilter::custom([](double) { return 1.0; }, "one");
  CHECK(max_abs_diff(exact_filter(d, one, x), x) < 1e-8);

  const auto lambda = TargetFilter::custom([](double v) { return v; }, "lambda");
  CHECK(max_abs_diff(exact_filter(d, lambda, x), spmm(l, x)) < 1e-12);

  const Matrix low = exact_filter(d, FilterKind::Low, x);
  CHECK(low(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(low(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("exact filter matches dense monomial polynomials") {
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t n = 10 + rng.below(91);
    const SparseSymMatrix l = normalized_laplacian(erdos_renyi_graph(n, 0.08, seed));
    const auto d = eigendecompose(l);
    std::vector<double> c(1 + rng.below(6));
    for (double& v : c) v = rng.uniform(-1.0, 1.0);
    const Matrix x = random_signal(n, 2, rng);
    const Matrix dense = l.to_dense();
    Matrix power = x;
    Matrix expect = c[0] * x;
    for (std::size_t k = 1; k < c.size(); ++k) {
      power = matmul(dense, power);
      expect.add_scaled(power, c[k]);
    }
    const auto poly = TargetFilter::custom(
        [c](double v) {
          double acc = 0.0;
          for (std::size_t k = c.size(); k-- > 0;) acc = acc * v + c[k];
          return acc;
        },
        "poly");
    CHECK(max_abs_diff(exact_filter(d, poly, x), expect) < 1e-7);
  }
}

TEST_CASE("exact filter is linear and composes multiplicatively") {
  Rng rng(21);
  const SparseSymMatrix l = normalized_laplacian(erdos_renyi_graph(40, 0.1, 4));
  const auto d = eigendecompose(l);
  const Matrix x1 = random_signal(40, 3, rng);
  const Matrix x2 = random_signal(40, 3, rng);
  const double a = 0.7, b = -1.3;
  for (FilterKind k : kAllFilterKinds) {
    const Matrix lhs = exact_filter(d, k, a * x1 + b * x2);
    const Matrix rhs = a * exact_filter(d, k, x1) + b * exact_filter(d, k, x2);
    CHECK(max_abs_diff(lhs, rhs) < 1e-8);
  }
  const TargetFilter f = FilterKind::Band;
  const TargetFilter g = FilterKind::Comb;
  const auto fg = TargetFilter::custom([f, g](double v) { return f(v) * g(v); }, "band*comb");
  CHECK(max_abs_diff(exact_filter(d, g, exact_filter(d, f, x1)), exact_filter(d, fg, x1)) < 1e-7);
}
