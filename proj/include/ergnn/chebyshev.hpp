#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/matrix.hpp"

namespace ergnn {

/// L - I: maps the normalized Laplacian spectrum [0, 2] onto [-1, 1].
SparseSymMatrix shift_laplacian(const SparseSymMatrix& laplacian);

/// x_j = cos((j + 1/2) pi / (K + 1)), j = 0..K; the roots of T_{K+1}.
std::vector<double> cheb_nodes(std::size_t order);

/// T_k(x) by the three-term recurrence.
double cheb_basis(std::size_t k, double x) noexcept;

/// sum_k coeffs[k] T_k(x), Clenshaw.
double cheb_series(std::span<const double> coeffs, double x) noexcept;

/// Filter values at the Chebyshev nodes. The expansion coefficients derived
/// from them are what the recurrence consumes.
struct NodeValueCoeffs {
  std::vector<double> node_values;

  static NodeValueCoeffs constant(std::size_t order, double value) {
    return {std::vector<double>(order + 1, value)};
  }
  std::size_t order() const noexcept { return node_values.size() - 1; }
};

/// (K+1) x (K+1) matrix M with alpha = M gamma:
/// M[k][j] = (2 - [k == 0]) / (K + 1) * T_k(x_j).
Matrix interp_matrix(std::size_t order);

/// Coefficients of the degree-K expansion interpolating (x_j, gamma_j).
std::vector<double> interp_to_coeffs(std::span<const double> node_values);
inline std::vector<double> interp_to_coeffs(const NodeValueCoeffs& c) { return interp_to_coeffs(c.node_values); }

/// blocks[k] = T_k(lhat) x for k = 0..K.
struct ChebStack {
  std::vector<Matrix> blocks;

  std::size_t order() const noexcept { return blocks.size() - 1; }
};

ChebStack cheb_apply(const SparseSymMatrix& lhat, const Matrix& x, std::size_t order);

/// sum_k coeffs[k] blocks[k].
Matrix combine(const ChebStack& stack, std::span<const double> coeffs);

}  // namespace ergnn
