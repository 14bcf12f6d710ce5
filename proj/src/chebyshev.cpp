#include "ergnn/chebyshev.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ergnn {

SparseSymMatrix shift_laplacian(const SparseSymMatrix& laplacian) { return laplacian.shifted(-1.0); }

std::vector<double> cheb_nodes(std::size_t order) {
  std::vector<double> nodes(order + 1);
  const double denom = static_cast<double>(order + 1);
  for (std::size_t j = 0; j <= order; ++j)
    nodes[j] = std::cos((static_cast<double>(j) + 0.5) * std::numbers::pi / denom);
  return nodes;
}

double cheb_basis(std::size_t k, double x) noexcept {
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (std::size_t i = 1; i < k; ++i) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double cheb_series(std::span<const double> coeffs, double x) noexcept {
  double b1 = 0.0;
  double b2 = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;) {
    const double b0 = coeffs[k] + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs.empty() ? 0.0 : coeffs[0] + x * b1 - b2;
}

Matrix interp_matrix(std::size_t order) {
  const auto nodes = cheb_nodes(order);
  const double inv = 1.0 / static_cast<double>(order + 1);
  Matrix m(order + 1, order + 1);
  for (std::size_t k = 0; k <= order; ++k) {
    const double w = (k == 0 ? 1.0 : 2.0) * inv;
    for (std::size_t j = 0; j <= order; ++j) m(k, j) = w * cheb_basis(k, nodes[j]);
  }
  return m;
}

std::vector<double> interp_to_coeffs(std::span<const double> node_values) {
  if (node_values.empty()) throw std::invalid_argument("interp_to_coeffs: no node values");
  const std::size_t order = node_values.size() - 1;
  const auto nodes = cheb_nodes(order);
  const double inv = 1.0 / static_cast<double>(order + 1);
  // sum_j T_k(x_j) = 0 for 1 <= k <= K, so the higher coefficients only see
  // the deviations from the mean. A constant input then maps to exactly
  // (c, 0, ..., 0).
  double mean = 0.0;
  for (double v : node_values) mean += v;
  mean *= inv;
  std::vector<double> coeffs(order + 1, 0.0);
  coeffs[0] = mean;
  for (std::size_t k = 1; k <= order; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= order; ++j) acc += (node_values[j] - mean) * cheb_basis(k, nodes[j]);
    coeffs[k] = 2.0 * inv * acc;
  }
  return coeffs;
}

ChebStack cheb_apply(const SparseSymMatrix& lhat, const Matrix& x, std::size_t order) {
  if (lhat.num_nodes() != x.rows()) {
    throw std::invalid_argument("cheb_apply: operator has " + std::to_string(lhat.num_nodes()) +
                                " rows, signal has " + std::to_string(x.rows()));
  }
  ChebStack stack;
  stack.blocks.reserve(order + 1);
  stack.blocks.push_back(x);
  if (order == 0) return stack;
  stack.blocks.push_back(spmm(lhat, x));
  for (std::size_t k = 2; k <= order; ++k) {
    Matrix next = spmm(lhat, stack.blocks[k - 1]);
    next *= 2.0;
    next -= stack.blocks[k - 2];
    stack.blocks.push_back(std::move(next));
  }
  return stack;
}

Matrix combine(const ChebStack& stack, std::span<const double> coeffs) {
  if (coeffs.size() != stack.blocks.size()) {
    throw std::invalid_argument("combine: " + std::to_string(coeffs.size()) + " coefficients for a stack of " +
                                std::to_string(stack.blocks.size()) + " blocks");
  }
  Matrix out(stack.blocks.front().rows(), stack.blocks.front().cols());
  for (std::size_t k = 0; k < coeffs.size(); ++k) out.add_scaled(stack.blocks[k], coeffs[k]);
  return out;
}

}  // namespace ergnn
