#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ergnn/matrix.hpp"
#include "ergnn/model.hpp"

namespace ergnn {

/// |analytic - numeric| <= rel_tol * max(|analytic|, |numeric|, 1e-4).
/// The floor keeps near-zero gradients from being judged on roundoff.
bool grad_close(double analytic, double numeric, double rel_tol = 1e-4);

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_rel_error = 0.0;
  std::string worst_entry;

  bool passed() const noexcept { return failed == 0 && checked > 0; }
};

/// Central differences of `loss` against `analytic` for every entry of
/// every tensor in `params`. `loss` must read the current values of params.
GradCheckResult finite_difference_check(std::span<Matrix* const> params, std::span<const Matrix> analytic,
                                        const std::function<double()>& loss, double h = 1e-5,
                                        double rel_tol = 1e-4);

/// Full-objective gradient check on a 20-node, 2-class random instance with
/// K1 = K2 = 4 and eta = xi = 1. Regression mode uses 2-column targets.
GradCheckResult check_model_gradients(TaskMode mode, std::uint64_t seed, bool detach_reg_target = false);

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct OracleSuiteOptions {
  /// Added to one Chebyshev coefficient on the recurrence side of the
  /// spectral-equivalence check. Nonzero values must make that check fail.
  double coefficient_perturbation = 0.0;
  std::uint64_t seed = 7;
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  double seconds = 0.0;

  bool passed() const;
};

/// Cross-module property checks: spmm vs dense products, Laplacian
/// symmetry and spectrum bounds, eigen residuals, Chebyshev recurrence vs
/// exact spectral filtering, interpolation exactness, and finite-difference
/// gradient checks for every differentiable op and the full model.
OracleReport run_oracle_suite(const OracleSuiteOptions& options = {});

/// Individual checks, also used by the acceptance suite.
OracleCheck check_spectral_equivalence(std::size_t graphs, std::size_t nodes, double edge_p, std::size_t order,
                                       double tol, std::uint64_t seed, double perturbation = 0.0);
OracleCheck check_laplacian_spectrum(std::size_t graphs, std::uint64_t seed);
OracleCheck check_interpolation_exactness(std::size_t max_order);

}  // namespace ergnn
