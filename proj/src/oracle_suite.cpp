#include "ergnn/oracle_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ergnn/autodiff.hpp"
#include "ergnn/chebyshev.hpp"
#include "ergnn/graph.hpp"
#include "ergnn/rng.hpp"
#include "ergnn/spectral.hpp"

namespace ergnn {

namespace {

using Clock = std::chrono::steady_clock;

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.uniform(-1.0, 1.0);
  return m;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

OracleCheck timed(const std::string& name, const std::function<void(OracleCheck&)>& body) {
  OracleCheck c;
  c.name = name;
  const auto start = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = std::string("exception: ") + e.what();
  }
  c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return c;
}

void record_grad(OracleCheck& c, const GradCheckResult& r) {
  c.passed = r.passed();
  c.detail = std::to_string(r.checked) + " entries, worst rel err " + fmt(r.worst_rel_error) +
             (r.worst_entry.empty() ? "" : " at " + r.worst_entry);
}

/// Gradient check for a scalar function of tape leaves built by `build`.
GradCheckResult op_grad_check(std::vector<Matrix> inputs, const std::function<ad::Var(std::vector<ad::Var>&)>& build) {
  std::vector<Matrix> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.leaf(m));
    ad::Var out = build(vars);
    tape.backward(out);
    for (auto& v : vars) analytic.push_back(v.grad());
  }
  std::vector<Matrix*> ptrs;
  for (auto& m : inputs) ptrs.push_back(&m);
  return finite_difference_check(ptrs, analytic, [&] {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& m : inputs) vars.push_back(tape.leaf(m, false));
    return build(vars).item();
  });
}

/// Pushes values away from the ReLU kink so central differences are valid.
void avoid_kinks(Matrix& m, double margin = 1e-2) {
  for (double& v : m.data())
    if (std::abs(v) < margin) v = v < 0 ? -margin : margin;
}

}  // namespace

bool grad_close(double analytic, double numeric, double rel_tol) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) <= rel_tol * scale;
}

GradCheckResult finite_difference_check(std::span<Matrix* const> params, std::span<const Matrix> analytic,
                                        const std::function<double()>& loss, double h, double rel_tol) {
  GradCheckResult r;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    auto pd = p.data();
    auto ad = analytic[t].data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double saved = pd[i];
      pd[i] = saved + h;
      const double up = loss();
      pd[i] = saved - h;
      const double down = loss();
      pd[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double scale = std::max({std::abs(ad[i]), std::abs(numeric), 1e-4});
      const double rel = std::abs(ad[i] - numeric) / scale;
      ++r.checked;
      if (!grad_close(ad[i], numeric, rel_tol)) ++r.failed;
      if (rel > r.worst_rel_error) {
        r.worst_rel_error = rel;
        r.worst_entry = "tensor " + std::to_string(t) + " entry " + std::to_string(i);
      }
    }
  }
  return r;
}

GradCheckResult check_model_gradients(TaskMode mode, std::uint64_t seed, bool detach_reg_target) {
  Rng rng(seed);
  constexpr std::size_t n = 20;
  constexpr std::size_t classes = 2;
  Graph g = erdos_renyi_graph(n, 0.2, derive_seed(seed, 1));
  const SparseSymMatrix lhat = shift_laplacian(normalized_laplacian(g));
  const Matrix x = random_matrix(n, 3, rng);

  ModelConfig mc;
  mc.in_features = 3;
  mc.out_width = classes;
  mc.k_num = 4;
  mc.k_den = 4;
  mc.mlp_layers = 2;
  mc.mlp_hidden = 8;
  RationalFilterParams params = init_params(mc, derive_seed(seed, 2));
  // Move the filters and biases off their symmetric initial values so every
  // coefficient carries a distinct gradient.
  for (double& v : params.gamma_num.data()) v = rng.uniform(0.5, 1.5);
  for (double& v : params.gamma_den.data()) v = rng.uniform(0.5, 1.5);
  for (double& v : params.b.data()) v = rng.uniform(-0.3, 0.3);
  for (auto& layer : params.mlp)
    for (double& v : layer.b.data()) v = rng.uniform(-0.3, 0.3);

  Targets y;
  if (mode == TaskMode::Classification) {
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.below(classes));
    y = labels;
  } else {
    y = random_matrix(n, classes, rng);
  }
  ad::NodeSet mask;
  for (std::size_t i = 0; i < n; i += 2) mask.push_back(i);

  LossSpec spec;
  spec.mode = mode;
  spec.weights = {1.0, 1.0};
  spec.detach_reg_target = detach_reg_target;

  // Keep first-layer pre-activations away from the kink.
  {
    const Matrix z1 = forward(params, x, lhat).z1;
    Matrix pre = matmul(z1, params.mlp[0].w);
    for (std::size_t r = 0; r < pre.rows(); ++r)
      for (std::size_t c = 0; c < pre.cols(); ++c)
        if (std::abs(pre(r, c) + params.mlp[0].b(0, c)) < 1e-3) params.mlp[0].b(0, c) += 5e-3;
  }

  const LossEvaluation eval = evaluate_loss(params, x, lhat, y, mask, spec, false, 0, true);
  std::vector<Matrix*> ptrs;
  for (auto& entry : params.trainable()) ptrs.push_back(entry.second);
  return finite_difference_check(ptrs, eval.grads, [&] {
    return evaluate_loss(params, x, lhat, y, mask, spec, false, 0, false).loss.total;
  });
}

bool OracleReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.passed; });
}

OracleCheck check_spectral_equivalence(std::size_t graphs, std::size_t nodes, double edge_p, std::size_t order,
                                       double tol, std::uint64_t seed, double perturbation) {
  return timed("chebyshev recurrence == exact spectral filter", [&](OracleCheck& c) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t gi = 0; gi < graphs; ++gi) {
      const Graph g = erdos_renyi_graph(nodes, edge_p, derive_seed(seed, gi));
      const SparseSymMatrix l = normalized_laplacian(g);
      const SparseSymMatrix lhat = shift_laplacian(l);
      const SpectralDecomposition spec = eigendecompose(l);
      NodeValueCoeffs gamma;
      for (std::size_t j = 0; j <= order; ++j) gamma.node_values.push_back(rng.uniform(-1.0, 1.0));
      const std::vector<double> alpha = interp_to_coeffs(gamma);
      const Matrix x = random_matrix(nodes, 3, rng);

      std::vector<double> used = alpha;
      used[order / 2] += perturbation;
      const Matrix recurrence = combine(cheb_apply(lhat, x, order), used);
      const TargetFilter p = TargetFilter::custom(
          [&alpha](double lambda) { return cheb_series(alpha, lambda - 1.0); }, "interpolant");
      const Matrix exact = exact_filter(spec, p, x);
      worst = std::max(worst, max_abs_diff(recurrence, exact));
    }
    c.passed = worst < tol;
    c.detail = std::to_string(graphs) + " graphs, max abs diff " + fmt(worst) + " (tol " + fmt(tol) + ")";
  });
}

OracleCheck check_laplacian_spectrum(std::size_t graphs, std::uint64_t seed) {
  return timed("normalized laplacian symmetric, spectrum in [0, 2]", [&](OracleCheck& c) {
    Rng rng(seed);
    double lo = INFINITY, hi = -INFINITY, asym = 0.0;
    for (std::size_t gi = 0; gi < graphs; ++gi) {
      const std::size_t n = 5 + rng.below(56);
      const double p = rng.uniform(0.0, 0.4);
      const Graph g = erdos_renyi_graph(n, p, derive_seed(seed, gi));
      const Matrix dense = normalized_laplacian(g).to_dense();
      asym = std::max(asym, max_abs_diff(dense, transpose(dense)));
      const SpectralDecomposition d = eigendecompose_dense(dense);
      lo = std::min(lo, d.eigenvalues.front());
      hi = std::max(hi, d.eigenvalues.back());
    }
    c.passed = lo >= -1e-8 && hi <= 2.0 + 1e-8 && asym <= 1e-12;
    c.detail = std::to_string(graphs) + " graphs, eigenvalues in [" + fmt(lo) + ", " + fmt(hi) + "], asymmetry " +
               fmt(asym);
  });
}

OracleCheck check_interpolation_exactness(std::size_t max_order) {
  return timed("chebyshev interpolation exact for T_k", [&](OracleCheck& c) {
    double worst = 0.0;
    for (std::size_t order = 0; order <= max_order; ++order) {
      const auto nodes = cheb_nodes(order);
      for (std::size_t k = 0; k <= order; ++k) {
        std::vector<double> values(order + 1);
        for (std::size_t j = 0; j <= order; ++j) values[j] = cheb_basis(k, nodes[j]);
        const auto coeffs = interp_to_coeffs(values);
        for (std::size_t i = 0; i <= order; ++i)
          worst = std::max(worst, std::abs(coeffs[i] - (i == k ? 1.0 : 0.0)));
      }
    }
    c.passed = worst < 1e-10;
    c.detail = "orders 0.." + std::to_string(max_order) + ", max coefficient error " + fmt(worst);
  });
}

OracleReport run_oracle_suite(const OracleSuiteOptions& options) {
  const auto start = Clock::now();
  OracleReport report;
  const std::uint64_t seed = options.seed;

  report.checks.push_back(timed("spmm == dense product", [&](OracleCheck& c) {
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t gi = 0; gi < 12; ++gi) {
      const std::size_t n = 2 + rng.below(199);
      const Graph g = erdos_renyi_graph(n, rng.uniform(0.0, 0.2), derive_seed(seed, 100 + gi));
      // Random symmetric values on the Laplacian pattern.
      const SparseSymMatrix l = normalized_laplacian(g);
      Matrix dense = l.to_dense();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
          if (dense(i, j) != 0.0 || i == j) dense(i, j) = dense(j, i) = rng.uniform(-2.0, 2.0);
      const SparseSymMatrix m = SparseSymMatrix::from_dense(dense);
      const Matrix x = random_matrix(n, 4, rng);
      Matrix expect(n, 4);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t j = 0; j < 4; ++j) expect(i, j) += dense(i, k) * x(k, j);
      worst = std::max(worst, max_abs_diff(spmm(m, x), expect));
    }
    c.passed = worst < 1e-12;
    c.detail = "12 graphs up to 200 nodes, max abs diff " + fmt(worst);
  }));

  report.checks.push_back(check_laplacian_spectrum(100, seed));

  report.checks.push_back(timed("eigendecomposition residuals", [&](OracleCheck& c) {
    Rng rng(seed + 1);
    Matrix a = random_matrix(50, 50, rng);
    a = a + transpose(a);
    const SpectralDecomposition d = eigendecompose_dense(a);
    double residual = 0.0;
    for (std::size_t k = 0; k < 50; ++k) {
      for (std::size_t i = 0; i < 50; ++i) {
        double av = 0.0;
        for (std::size_t j = 0; j < 50; ++j) av += a(i, j) * d.eigenvectors(j, k);
        residual = std::max(residual, std::abs(av - d.eigenvalues[k] * d.eigenvectors(i, k)));
      }
    }
    const double ortho = max_abs_diff(matmul(transpose(d.eigenvectors), d.eigenvectors), Matrix::identity(50));
    const bool ascending = std::is_sorted(d.eigenvalues.begin(), d.eigenvalues.end());
    c.passed = residual < 1e-8 && ortho < 1e-8 && ascending;
    c.detail = "residual " + fmt(residual) + ", orthonormality " + fmt(ortho);
  }));

  report.checks.push_back(check_spectral_equivalence(20, 50, 0.1, 10, 1e-7, seed, options.coefficient_perturbation));

  report.checks.push_back(timed("monomial filter == dense matrix polynomial", [&](OracleCheck& c) {
    Rng rng(seed + 2);
    double worst = 0.0;
    for (std::size_t gi = 0; gi < 5; ++gi) {
      const std::size_t n = 20 + rng.below(81);
      const Graph g = erdos_renyi_graph(n, 0.1, derive_seed(seed, 200 + gi));
      const SparseSymMatrix l = normalized_laplacian(g);
      const SpectralDecomposition d = eigendecompose(l);
      std::vector<double> coeffs(6);
      for (double& v : coeffs) v = rng.uniform(-1.0, 1.0);
      const Matrix x = random_matrix(n, 2, rng);
      const Matrix dense = l.to_dense();
      Matrix power = x;
      Matrix expect = coeffs[0] * x;
      for (std::size_t k = 1; k < coeffs.size(); ++k) {
        power = matmul(dense, power);
        expect.add_scaled(power, coeffs[k]);
      }
      const TargetFilter f = TargetFilter::custom(
          [&coeffs](double lambda) {
            double acc = 0.0;
            for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * lambda + coeffs[k];
            return acc;
          },
          "monomial");
      worst = std::max(worst, max_abs_diff(exact_filter(d, f, x), expect));
    }
    c.passed = worst < 1e-7;
    c.detail = "5 graphs, max abs diff " + fmt(worst);
  }));

  report.checks.push_back(check_interpolation_exactness(10));

  // Per-op gradient checks.
  Rng rng(seed + 3);
  report.checks.push_back(timed("gradient: linear", [&](OracleCheck& c) {
    record_grad(c, op_grad_check({random_matrix(6, 3, rng), random_matrix(3, 4, rng), random_matrix(1, 4, rng)},
                                 [](auto& v) { return ad::sum(ad::linear(v[0], v[1], v[2])); }));
  }));
  report.checks.push_back(timed("gradient: relu", [&](OracleCheck& c) {
    Matrix x = random_matrix(6, 4, rng);
    avoid_kinks(x);
    Matrix w = random_matrix(4, 4, rng);
    record_grad(c, op_grad_check({x, w}, [](auto& v) { return ad::sum(ad::matmul(ad::relu(v[0]), v[1])); }));
  }));
  report.checks.push_back(timed("gradient: softmax", [&](OracleCheck& c) {
    Matrix w = random_matrix(5, 4, rng);
    record_grad(c, op_grad_check({random_matrix(5, 4, rng)}, [w](auto& v) {
      ad::Tape& t = v[0].tape();
      return ad::sum(ad::matmul(ad::softmax_rows(v[0]), t.constant(transpose(w))));
    }));
  }));
  report.checks.push_back(timed("gradient: cross entropy (hard)", [&](OracleCheck& c) {
    std::vector<int> labels{0, 2, 1, 1, 0, 2};
    ad::NodeSet mask{0, 1, 3, 5};
    record_grad(c, op_grad_check({random_matrix(6, 3, rng, 2.0)},
                                 [labels, mask](auto& v) { return ad::cross_entropy(v[0], labels, mask); }));
  }));
  report.checks.push_back(timed("gradient: cross entropy (soft, both args)", [&](OracleCheck& c) {
    ad::NodeSet mask = ad::all_nodes(6);
    record_grad(c, op_grad_check({random_matrix(6, 3, rng, 2.0), random_matrix(6, 3, rng)}, [mask](auto& v) {
      return ad::cross_entropy(v[0], ad::softmax_rows(v[1]), mask);
    }));
  }));
  report.checks.push_back(timed("gradient: mse", [&](OracleCheck& c) {
    ad::NodeSet mask{1, 2, 4};
    record_grad(c, op_grad_check({random_matrix(5, 2, rng), random_matrix(5, 2, rng)},
                                 [mask](auto& v) { return ad::mse(v[0], v[1], mask); }));
  }));
  const Graph small = erdos_renyi_graph(12, 0.3, derive_seed(seed, 300));
  const SparseSymMatrix small_lhat = shift_laplacian(normalized_laplacian(small));
  report.checks.push_back(timed("gradient: spmm", [&](OracleCheck& c) {
    Matrix w = random_matrix(12, 2, rng);
    record_grad(c, op_grad_check({random_matrix(12, 2, rng)}, [&small_lhat, w](auto& v) {
      ad::Tape& t = v[0].tape();
      ad::Var y = ad::spmm(small_lhat, v[0]);
      return ad::mse(y, t.constant(w), ad::all_nodes(12));
    }));
  }));
  report.checks.push_back(timed("gradient: chebyshev filter", [&](OracleCheck& c) {
    Matrix w = random_matrix(12, 2, rng);
    record_grad(c, op_grad_check({random_matrix(12, 2, rng), random_matrix(1, 6, rng)}, [&small_lhat, w](auto& v) {
      ad::Tape& t = v[0].tape();
      return ad::mse(ad::cheb_filter(small_lhat, v[0], v[1]), t.constant(w), ad::all_nodes(12));
    }));
  }));
  report.checks.push_back(timed("gradient: full model (classification)", [&](OracleCheck& c) {
    record_grad(c, check_model_gradients(TaskMode::Classification, seed));
  }));
  report.checks.push_back(timed("gradient: full model (regression)", [&](OracleCheck& c) {
    record_grad(c, check_model_gradients(TaskMode::Regression, seed));
  }));

  report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

}  // namespace ergnn
