#include "ergnn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ergnn {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(2.0 * s);
}

}  // namespace

SpectralDecomposition eigendecompose_dense(const Matrix& symmetric, const EigenOptions& options) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw std::invalid_argument("eigendecompose: matrix is not square");
  if (n > options.dense_limit) {
    throw EigenError("eigendecompose: " + std::to_string(n) + " nodes exceeds dense limit " +
                     std::to_string(options.dense_limit));
  }
  Matrix a = symmetric;
  // Rows of vt are eigenvectors, so each rotation touches two contiguous rows.
  Matrix vt = Matrix::identity(n);

  int sweep = 0;
  double off = off_diagonal_norm(a);
  while (off >= options.tolerance) {
    if (sweep == options.max_sweeps) {
      throw EigenError("eigendecompose: no convergence after " + std::to_string(sweep) +
                       " sweeps, off-diagonal residual " + std::to_string(off));
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 4 && std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq)) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        auto row_p = a.row(p);
        auto row_q = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = row_p[k];
          const double akq = row_q[k];
          row_p[k] = c * akp - s * akq;
          row_q[k] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          a(k, p) = row_p[k];
          a(k, q) = row_q[k];
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
    off = off_diagonal_norm(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = vt(src, i);
  }
  return out;
}

SpectralDecomposition eigendecompose(const SparseSymMatrix& m, const EigenOptions& options) {
  if (m.num_nodes() > options.dense_limit) {
    throw EigenError("eigendecompose: " + std::to_string(m.num_nodes()) + " nodes exceeds dense limit " +
                     std::to_string(options.dense_limit));
  }
  return eigendecompose_dense(m.to_dense(), options);
}

std::string_view to_string(FilterKind kind) noexcept {
  switch (kind) {
    case FilterKind::Low: return "low";
    case FilterKind::High: return "high";
    case FilterKind::Band: return "band";
    case FilterKind::Reject: return "reject";
    case FilterKind::Comb: return "comb";
  }
  return "?";
}

FilterKind parse_filter_kind(std::string_view name) {
  for (FilterKind k : kAllFilterKinds)
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown filter kind '" + std::string(name) +
                              "' (expected low, high, band, reject or comb)");
}

double target_filter_eval(FilterKind kind, double lambda) noexcept {
  switch (kind) {
    case FilterKind::Low: return std::exp(-10.0 * lambda * lambda);
    case FilterKind::High: return 1.0 - std::exp(-10.0 * lambda * lambda);
    case FilterKind::Band: return std::exp(-10.0 * (lambda - 1.0) * (lambda - 1.0));
    case FilterKind::Reject: return 1.0 - std::exp(-10.0 * (lambda - 1.0) * (lambda - 1.0));
    case FilterKind::Comb: return std::abs(std::sin(std::numbers::pi * lambda));
  }
  return 0.0;
}

TargetFilter TargetFilter::custom(std::function<double(double)> fn, std::string name) {
  return TargetFilter(Custom{std::move(fn), std::move(name)});
}

double TargetFilter::operator()(double lambda) const {
  if (const auto* kind = std::get_if<FilterKind>(&impl_)) return target_filter_eval(*kind, lambda);
  return std::get<Custom>(impl_).fn(lambda);
}

std::string TargetFilter::name() const {
  if (const auto* kind = std::get_if<FilterKind>(&impl_)) return std::string(to_string(*kind));
  return std::get<Custom>(impl_).name;
}

Matrix exact_filter(const SpectralDecomposition& d, const TargetFilter& filter, const Matrix& x) {
  const std::size_t n = d.size();
  if (x.rows() != n) {
    throw std::invalid_argument("exact_filter: signal has " + std::to_string(x.rows()) + " rows, spectrum has " +
                                std::to_string(n));
  }
  const Matrix& u = d.eigenvectors;
  // coeffs = diag(f) U^T x
  Matrix coeffs(n, x.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    auto ui = u.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      const double uik = ui[k];
      auto ck = coeffs.row(k);
      for (std::size_t j = 0; j < x.cols(); ++j) ck[j] += uik * xi[j];
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = filter(d.eigenvalues[k]);
    for (double& v : coeffs.row(k)) v *= fk;
  }
  return matmul(u, coeffs);
}

Matrix reconstruct(const SpectralDecomposition& d) {
  Matrix scaled = d.eigenvectors;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t k = 0; k < scaled.cols(); ++k) scaled(i, k) *= d.eigenvalues[k];
  return matmul(scaled, transpose(d.eigenvectors));
}

}  // namespace ergnn
