#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/matrix.hpp"

namespace ergnn {

/// Eigenpairs of a symmetric matrix: eigenvalues ascending, eigenvector k in
/// column k of `eigenvectors`.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;

  std::size_t size() const noexcept { return eigenvalues.size(); }
};

struct EigenOptions {
  std::size_t dense_limit = 3000;
  double tolerance = 1e-10;  // off-diagonal Frobenius norm
  int max_sweeps = 100;
};

class EigenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cyclic Jacobi on a dense copy. Throws EigenError when the matrix exceeds
/// options.dense_limit or the sweep cap is hit.
SpectralDecomposition eigendecompose(const SparseSymMatrix& m, const EigenOptions& options = {});
SpectralDecomposition eigendecompose_dense(const Matrix& symmetric, const EigenOptions& options = {});

enum class FilterKind { Low, High, Band, Reject, Comb };

inline constexpr FilterKind kAllFilterKinds[] = {FilterKind::Low, FilterKind::High, FilterKind::Band,
                                                 FilterKind::Reject, FilterKind::Comb};

std::string_view to_string(FilterKind kind) noexcept;
/// Accepts low, high, band, reject, comb. Throws std::invalid_argument otherwise.
FilterKind parse_filter_kind(std::string_view name);

double target_filter_eval(FilterKind kind, double lambda) noexcept;

/// A scalar response f(lambda): one of the named kinds or a user function.
class TargetFilter {
 public:
  TargetFilter(FilterKind kind) : impl_(kind) {}  // NOLINT(google-explicit-constructor)
  static TargetFilter custom(std::function<double(double)> fn, std::string name);

  double operator()(double lambda) const;
  std::string name() const;
  bool is_custom() const noexcept { return std::holds_alternative<Custom>(impl_); }

 private:
  struct Custom {
    std::function<double(double)> fn;
    std::string name;
  };
  explicit TargetFilter(Custom c) : impl_(std::move(c)) {}
  std::variant<FilterKind, Custom> impl_;
};

/// U diag(f(lambda)) U^T x.
Matrix exact_filter(const SpectralDecomposition& d, const TargetFilter& filter, const Matrix& x);

/// U diag(lambda) U^T, used to check reconstructions.
Matrix reconstruct(const SpectralDecomposition& d);

}  // namespace ergnn
