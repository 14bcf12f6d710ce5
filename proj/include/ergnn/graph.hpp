#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ergnn/matrix.hpp"

namespace ergnn {

using NodeId = std::size_t;
using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

/// Undirected unweighted graph in CSR form. Every undirected edge is stored
/// twice (u->v and v->u); neighbor lists are sorted, with no self-loops and
/// no duplicates.
class Graph {
 public:
  Graph() : row_offsets_{0} {}

  std::size_t num_nodes() const noexcept { return row_offsets_.size() - 1; }
  std::size_t num_stored_edges() const noexcept { return col_indices_.size(); }
  std::size_t degree(NodeId u) const { return row_offsets_[u + 1] - row_offsets_[u]; }
  std::span<const NodeId> neighbors(NodeId u) const {
    return {col_indices_.data() + row_offsets_[u], degree(u)};
  }
  bool has_edge(NodeId u, NodeId v) const;

  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }

  /// Each undirected edge once, as (u, v) with u < v, in CSR order.
  EdgeList undirected_edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  friend Graph build_graph(std::span<const std::pair<NodeId, NodeId>> edges, std::size_t num_nodes);

  std::vector<std::size_t> row_offsets_;
  std::vector<NodeId> col_indices_;
};

/// Symmetrizes, drops self-loops and duplicates. Throws std::out_of_range on
/// an endpoint >= num_nodes.
Graph build_graph(std::span<const std::pair<NodeId, NodeId>> edges, std::size_t num_nodes);

/// Symmetric sparse matrix in CSR form. Every row carries its diagonal entry
/// (possibly zero) so diagonal shifts never change the pattern.
class SparseSymMatrix {
 public:
  SparseSymMatrix() : row_offsets_{0} {}
  /// Validates CSR structure, sorted columns and symmetry within `sym_tol`.
  SparseSymMatrix(std::vector<std::size_t> row_offsets, std::vector<NodeId> col_indices,
                  std::vector<double> values, double sym_tol = 1e-12);

  static SparseSymMatrix diagonal(std::span<const double> diag);
  static SparseSymMatrix identity(std::size_t n);
  /// Keeps entries with |a_ij| > drop_tol plus the full diagonal.
  static SparseSymMatrix from_dense(const Matrix& dense, double drop_tol = 0.0);

  std::size_t num_nodes() const noexcept { return row_offsets_.size() - 1; }
  std::size_t nnz() const noexcept { return values_.size(); }
  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const NodeId> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  double at(NodeId r, NodeId c) const;
  Matrix to_dense() const;

  /// Returns a copy with `delta` added to every diagonal entry.
  SparseSymMatrix shifted(double delta) const;

 private:
  std::vector<std::size_t> row_offsets_;
  std::vector<NodeId> col_indices_;
  std::vector<double> values_;
};

/// L = I - D^{-1/2} A D^{-1/2}; isolated nodes get an all-zero row.
SparseSymMatrix normalized_laplacian(const Graph& g);

/// m * x with ascending-column summation inside each row.
Matrix spmm(const SparseSymMatrix& m, const Matrix& x);
/// out = m * x, reusing out's storage. `out` must not alias `x`.
void spmm_into(const SparseSymMatrix& m, const Matrix& x, Matrix& out);

/// 4-neighbor lattice; node id = r * cols + c.
Graph grid_graph(std::size_t rows, std::size_t cols);

struct SbmGraph {
  Graph graph;
  std::vector<int> block_of;  // block label per node
};

SbmGraph sbm_graph(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                   std::uint64_t seed);

/// G(n, p) random graph.
Graph erdos_renyi_graph(std::size_t n, double p, std::uint64_t seed);

/// Edge-list text: one `u v` per line, `#` comments, blank lines allowed.
/// Node count is inferred as max index + 1 unless given. Parse errors throw
/// std::runtime_error naming the source and line.
Graph read_edge_list(std::istream& in, std::optional<std::size_t> num_nodes = std::nullopt,
                     const std::string& source_name = "<stream>");
Graph read_edge_list(const std::filesystem::path& path,
                     std::optional<std::size_t> num_nodes = std::nullopt);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace ergnn
