#include "ergnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ergnn/rng.hpp"

namespace ergnn {

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

EdgeList Graph::undirected_edges() const {
  EdgeList out;
  out.reserve(num_stored_edges() / 2);
  for (NodeId u = 0; u < num_nodes(); ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

Graph build_graph(std::span<const std::pair<NodeId, NodeId>> edges, std::size_t num_nodes) {
  std::vector<std::vector<NodeId>> adj(num_nodes);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw std::out_of_range("build_graph: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  Graph g;
  g.row_offsets_.assign(num_nodes + 1, 0);
  for (NodeId u = 0; u < num_nodes; ++u) {
    auto& nb = adj[u];
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    g.row_offsets_[u + 1] = g.row_offsets_[u] + nb.size();
  }
  g.col_indices_.reserve(g.row_offsets_.back());
  for (const auto& nb : adj) g.col_indices_.insert(g.col_indices_.end(), nb.begin(), nb.end());
  return g;
}

SparseSymMatrix::SparseSymMatrix(std::vector<std::size_t> row_offsets, std::vector<NodeId> col_indices,
                                 std::vector<double> values, double sym_tol)
    : row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.empty() || row_offsets_.front() != 0)
    throw std::invalid_argument("SparseSymMatrix: row_offsets must start at 0");
  if (row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size())
    throw std::invalid_argument("SparseSymMatrix: inconsistent array lengths");
  const std::size_t n = num_nodes();
  for (std::size_t r = 0; r < n; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1])
      throw std::invalid_argument("SparseSymMatrix: row_offsets not nondecreasing");
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      if (col_indices_[k] >= n) throw std::invalid_argument("SparseSymMatrix: column out of range");
      if (k > row_offsets_[r] && col_indices_[k] <= col_indices_[k - 1])
        throw std::invalid_argument("SparseSymMatrix: columns not strictly increasing in row " +
                                    std::to_string(r));
      if (!std::isfinite(values_[k])) throw std::invalid_argument("SparseSymMatrix: non-finite value");
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const NodeId c = col_indices_[k];
      auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[c]);
      auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[c + 1]);
      auto it = std::lower_bound(first, last, r);
      if (it == last || *it != r)
        throw std::invalid_argument("SparseSymMatrix: pattern not symmetric at (" + std::to_string(r) +
                                    ", " + std::to_string(c) + ")");
      if (std::abs(values_[static_cast<std::size_t>(it - col_indices_.begin())] - values_[k]) > sym_tol)
        throw std::invalid_argument("SparseSymMatrix: values not symmetric at (" + std::to_string(r) +
                                    ", " + std::to_string(c) + ")");
    }
  }
}

SparseSymMatrix SparseSymMatrix::diagonal(std::span<const double> diag) {
  std::vector<std::size_t> offsets(diag.size() + 1);
  std::vector<NodeId> cols(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) {
    offsets[i + 1] = i + 1;
    cols[i] = i;
  }
  return SparseSymMatrix(std::move(offsets), std::move(cols), {diag.begin(), diag.end()});
}

SparseSymMatrix SparseSymMatrix::identity(std::size_t n) {
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

SparseSymMatrix SparseSymMatrix::from_dense(const Matrix& dense, double drop_tol) {
  if (dense.rows() != dense.cols()) throw std::invalid_argument("SparseSymMatrix::from_dense: not square");
  const std::size_t n = dense.rows();
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double v = dense(r, c);
      // Keep structurally symmetric: decide on the pair, not the single entry.
      const bool keep = r == c || std::abs(v) > drop_tol || std::abs(dense(c, r)) > drop_tol;
      if (keep) {
        cols.push_back(c);
        vals.push_back(v);
      }
    }
    offsets.push_back(cols.size());
  }
  return SparseSymMatrix(std::move(offsets), std::move(cols), std::move(vals));
}

double SparseSymMatrix::at(NodeId r, NodeId c) const {
  auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r]);
  auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r + 1]);
  auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Matrix SparseSymMatrix::to_dense() const {
  const std::size_t n = num_nodes();
  Matrix d(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) d(r, col_indices_[k]) = values_[k];
  return d;
}

SparseSymMatrix SparseSymMatrix::shifted(double delta) const {
  SparseSymMatrix out = *this;
  for (std::size_t r = 0; r < num_nodes(); ++r) {
    bool found = false;
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      if (col_indices_[k] == r) {
        out.values_[k] += delta;
        found = true;
        break;
      }
    }
    if (!found) throw std::logic_error("SparseSymMatrix::shifted: row without stored diagonal");
  }
  return out;
}

SparseSymMatrix normalized_laplacian(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (NodeId u = 0; u < n; ++u) {
    const std::size_t d = g.degree(u);
    if (d > 0) inv_sqrt_deg[u] = 1.0 / std::sqrt(static_cast<double>(d));
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<NodeId> cols;
  std::vector<double> vals;
  cols.reserve(g.num_stored_edges() + n);
  vals.reserve(g.num_stored_edges() + n);
  for (NodeId u = 0; u < n; ++u) {
    bool diag_done = false;
    auto emit_diag = [&] {
      cols.push_back(u);
      vals.push_back(g.degree(u) > 0 ? 1.0 : 0.0);
      diag_done = true;
    };
    for (NodeId v : g.neighbors(u)) {
      if (!diag_done && v > u) emit_diag();
      cols.push_back(v);
      vals.push_back(-inv_sqrt_deg[u] * inv_sqrt_deg[v]);
    }
    if (!diag_done) emit_diag();
    offsets[u + 1] = cols.size();
  }
  return SparseSymMatrix(std::move(offsets), std::move(cols), std::move(vals));
}

void spmm_into(const SparseSymMatrix& m, const Matrix& x, Matrix& out) {
  if (m.num_nodes() != x.rows()) {
    throw std::invalid_argument("spmm: matrix has " + std::to_string(m.num_nodes()) + " rows, signal has " +
                                std::to_string(x.rows()));
  }
  if (&out == &x) throw std::invalid_argument("spmm_into: output aliases input");
  if (!out.same_shape(x)) out = Matrix(x.rows(), x.cols());
  const auto offsets = m.row_offsets();
  const auto cols = m.col_indices();
  const auto vals = m.values();
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < m.num_nodes(); ++r) {
    auto out_row = out.row(r);
    std::fill(out_row.begin(), out_row.end(), 0.0);
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      const double a = vals[k];
      auto x_row = x.row(cols[k]);
      for (std::size_t j = 0; j < d; ++j) out_row[j] += a * x_row[j];
    }
  }
}

Matrix spmm(const SparseSymMatrix& m, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  spmm_into(m, x, out);
  return out;
}

Graph grid_graph(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("grid_graph: zero dimension");
  EdgeList edges;
  edges.reserve(rows * (cols - 1) + cols * (rows - 1));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const NodeId u = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(u, u + 1);
      if (r + 1 < rows) edges.emplace_back(u, u + cols);
    }
  }
  return build_graph(edges, rows * cols);
}

SbmGraph sbm_graph(std::span<const std::size_t> block_sizes, double p_in, double p_out, std::uint64_t seed) {
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0))
    throw std::invalid_argument("sbm_graph: probabilities must lie in [0, 1]");
  SbmGraph out;
  for (std::size_t b = 0; b < block_sizes.size(); ++b)
    out.block_of.insert(out.block_of.end(), block_sizes[b], static_cast<int>(b));
  const std::size_t n = out.block_of.size();
  Rng rng(seed);
  EdgeList edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = out.block_of[u] == out.block_of[v] ? p_in : p_out;
      // Always draw, so the stream position does not depend on p.
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  }
  out.graph = build_graph(edges, n);
  return out;
}

Graph erdos_renyi_graph(std::size_t n, double p, std::uint64_t seed) {
  const std::size_t sizes[] = {n};
  return sbm_graph(sizes, p, p, seed).graph;
}

}  // namespace ergnn
