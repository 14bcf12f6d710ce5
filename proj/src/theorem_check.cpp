#include "ergnn/theorem_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ergnn/chebyshev.hpp"
#include "ergnn/linalg.hpp"

namespace ergnn {

namespace {

Matrix basis_matrix(const std::vector<double>& grid, std::size_t order) {
  Matrix a(grid.size(), order + 1);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t k = 0; k <= order; ++k) a(i, k) = cheb_basis(k, grid[i] - 1.0);
  return a;
}

std::vector<double> mat_vec(const Matrix& basis, const std::vector<double>& coeffs) {
  std::vector<double> out(basis.rows(), 0.0);
  for (std::size_t i = 0; i < basis.rows(); ++i)
    for (std::size_t k = 0; k < coeffs.size(); ++k) out[i] += basis(i, k) * coeffs[k];
  return out;
}

struct Fit {
  double mse = 0.0;
  double max_err = 0.0;
  double min_abs_q = 0.0;
};

Fit evaluate(const std::vector<double>& p, const std::vector<double>& q, const std::vector<double>& f) {
  Fit fit;
  fit.min_abs_q = std::abs(q[0]);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = p[i] / q[i] - f[i];
    fit.mse += r * r;
    fit.max_err = std::max(fit.max_err, std::abs(r));
    fit.min_abs_q = std::min(fit.min_abs_q, std::abs(q[i]));
  }
  fit.mse /= static_cast<double>(f.size());
  return fit;
}

}  // namespace

std::vector<double> lambda_grid(std::size_t points) {
  if (points < 2) throw std::invalid_argument("lambda_grid: need at least two points");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = 2.0 * static_cast<double>(i) / static_cast<double>(points - 1);
  return grid;
}

TheoremReport run_theorem_check(const TargetFilter& target, const TheoremCheckOptions& options) {
  const auto grid = lambda_grid(options.grid_points);
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = target(grid[i]);

  TheoremReport report;
  report.filter = target.name();

  // Stage A: best polynomial in the least-squares sense.
  const Matrix pa = basis_matrix(grid, options.k_num);
  report.numerator_coeffs = least_squares(pa, f);
  const std::vector<double> p = mat_vec(pa, report.numerator_coeffs);

  // Stage B: denominator only, starting from q = 1.
  const Matrix qa = basis_matrix(grid, options.k_den);
  const std::size_t nb = options.k_den + 1;
  std::vector<double> beta(nb, 0.0);
  beta[0] = 1.0;
  std::vector<double> q = mat_vec(qa, beta);
  Fit current = evaluate(p, q, f);
  report.polynomial_error = current.mse;
  report.polynomial_max_error = current.max_err;

  double damping = 1e-3;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    report.iterations = iter + 1;
    // r_i = p_i / q_i - f_i,  dr_i / db_k = -p_i T_k / q_i^2
    Matrix jtj(nb, nb);
    std::vector<double> jtr(nb, 0.0);
    std::vector<double> row(nb);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = p[i] / q[i] - f[i];
      const double s = -p[i] / (q[i] * q[i]);
      for (std::size_t k = 0; k < nb; ++k) row[k] = s * qa(i, k);
      for (std::size_t a = 0; a < nb; ++a) {
        jtr[a] += row[a] * r;
        for (std::size_t b = 0; b <= a; ++b) jtj(a, b) += row[a] * row[b];
      }
    }
    for (std::size_t a = 0; a < nb; ++a)
      for (std::size_t b = a + 1; b < nb; ++b) jtj(a, b) = jtj(b, a);
    double scale = 0.0;
    for (std::size_t a = 0; a < nb; ++a) scale = std::max(scale, jtj(a, a));
    if (scale == 0.0) break;  // p == 0: the denominator has no influence

    bool accepted = false;
    while (damping < 1e12) {
      Matrix lhs = jtj;
      for (std::size_t a = 0; a < nb; ++a) lhs(a, a) += damping * scale;
      std::vector<double> rhs(nb);
      for (std::size_t a = 0; a < nb; ++a) rhs[a] = -jtr[a];
      std::vector<double> delta;
      try {
        delta = solve_spd(lhs, rhs);
      } catch (const std::domain_error&) {
        damping *= 10.0;
        continue;
      }
      std::vector<double> trial = beta;
      for (std::size_t a = 0; a < nb; ++a) trial[a] += delta[a];
      const std::vector<double> tq = mat_vec(qa, trial);
      const Fit fit = evaluate(p, tq, f);
      if (fit.min_abs_q < options.clamp) {
        ++report.clamp_rejections;
        damping *= 4.0;
        continue;
      }
      if (std::isfinite(fit.mse) && fit.mse < current.mse) {
        const double gain = current.mse - fit.mse;
        beta = trial;
        q = tq;
        current = fit;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = gain > 1e-15 * std::max(current.mse, 1e-300);
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) break;
  }

  report.denominator_coeffs = beta;
  report.rational_error = current.mse;
  report.rational_max_error = current.max_err;
  report.min_abs_denominator = current.min_abs_q;
  report.degenerate = current.min_abs_q < 2.0 * options.clamp;
  return report;
}

}  // namespace ergnn
