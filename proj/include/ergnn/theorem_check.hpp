#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ergnn/spectral.hpp"

namespace ergnn {

struct TheoremCheckOptions {
  std::size_t k_num = 10;
  std::size_t k_den = 10;
  std::size_t grid_points = 2001;
  /// Denominator values must satisfy |q(lambda)| >= clamp on the grid.
  double clamp = 1e-3;
  int max_iterations = 2000;
};

/// Fixed-numerator rational fit on a dense lambda grid of [0, 2].
///
/// Stage A fits the least-squares polynomial p*(lambda) = sum_k a_k
/// T_k(lambda - 1) of degree k_num to the target. Stage B freezes p* and fits
/// only the denominator q(lambda) = sum_k b_k T_k(lambda - 1), starting from
/// q = 1, by damped Gauss-Newton steps that are accepted only when they lower
/// the grid error and keep |q| above the clamp. Errors are grid mean squared
/// errors, so rational_error <= polynomial_error holds by construction.
struct TheoremReport {
  std::string filter;
  std::vector<double> numerator_coeffs;
  std::vector<double> denominator_coeffs;
  double polynomial_error = 0.0;
  double rational_error = 0.0;
  double polynomial_max_error = 0.0;
  double rational_max_error = 0.0;
  double min_abs_denominator = 0.0;
  int iterations = 0;
  int clamp_rejections = 0;
  /// The clamp is binding at the solution.
  bool degenerate = false;

  bool monotone() const noexcept { return rational_error <= polynomial_error; }
};

TheoremReport run_theorem_check(const TargetFilter& target, const TheoremCheckOptions& options = {});

/// Evenly spaced points on [0, 2], endpoints included.
std::vector<double> lambda_grid(std::size_t points);

}  // namespace ergnn
