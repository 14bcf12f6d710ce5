#pragma once

#include <span>
#include <vector>

#include "ergnn/matrix.hpp"

namespace ergnn {

/// argmin_x |a x - b|_2 for a tall, full-column-rank `a` (Householder QR).
std::vector<double> least_squares(const Matrix& a, std::span<const double> b);

/// Solves a x = b for symmetric positive definite `a` (Cholesky). Throws
/// std::domain_error when `a` is not numerically positive definite.
std::vector<double> solve_spd(const Matrix& a, std::span<const double> b);

}  // namespace ergnn
