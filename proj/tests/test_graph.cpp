#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "ergnn/graph.hpp"
#include "ergnn/rng.hpp"
#include "ergnn/spectral.hpp"

using namespace ergnn;

namespace {

Graph from_edges(std::initializer_list<std::pair<NodeId, NodeId>> e, std::size_t n) {
  const EdgeList edges(e);
  return build_graph(edges, n);
}

}  // namespace

TEST_CASE("build_graph symmetrizes and cleans edges") {
  const Graph p2 = from_edges({{0, 1}}, 2);
  CHECK(p2.num_nodes() == 2);
  CHECK(p2.num_stored_edges() == 2);
  CHECK(p2.has_edge(0, 1));
  CHECK(p2.has_edge(1, 0));

  const Graph messy = from_edges({{0, 1}, {1, 0}, {0, 0}}, 2);
  CHECK(messy == p2);

  const Graph k3 = from_edges({{0, 1}, {1, 2}, {2, 0}}, 3);
  CHECK(k3.num_stored_edges() == 6);
  for (NodeId u = 0; u < 3; ++u) CHECK(k3.degree(u) == 2);
}

TEST_CASE("build_graph rejects out-of-range endpoints") {
  const EdgeList bad{{0, 2}};
  CHECK_THROWS_AS(build_graph(bad, 2), std::out_of_range);
}

TEST_CASE("build_graph is idempotent") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = erdos_renyi_graph(40, 0.15, seed);
    const EdgeList edges = g.undirected_edges();
    const Graph again = build_graph(edges, g.num_nodes());
    CHECK(again == g);
    CHECK(std::vector<std::size_t>(again.row_offsets().begin(), again.row_offsets().end()) ==
          std::vector<std::size_t>(g.row_offsets().begin(), g.row_offsets().end()));
  }
}

TEST_CASE("normalized laplacian of small graphs") {
  const Matrix l2 = normalized_laplacian(from_edges({{0, 1}}, 2)).to_dense();
  CHECK(l2 == Matrix::from_rows({{1, -1}, {-1, 1}}));

  const auto d2 = eigendecompose_dense(l2);
  CHECK(std::abs(d2.eigenvalues[0]) < 1e-12);
  CHECK(std::abs(d2.eigenvalues[1] - 2.0) < 1e-12);

  const Matrix l3 = normalized_laplacian(from_edges({{0, 1}, {1, 2}, {2, 0}}, 3)).to_dense();
  const auto d3 = eigendecompose_dense(l3);
  CHECK(std::abs(d3.eigenvalues[0]) < 1e-12);
  CHECK(std::abs(d3.eigenvalues[1] - 1.5) < 1e-12);
  CHECK(std::abs(d3.eigenvalues[2] - 1.5) < 1e-12);
}

TEST_CASE("isolated node has an all-zero laplacian row and column") {
  const SparseSymMatrix l = normalized_laplacian(from_edges({{0, 1}}, 3));
  const Matrix d = l.to_dense();
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(d(2, j) == 0.0);
    CHECK(d(j, 2) == 0.0);
  }
  // The diagonal slot is still stored, so shifting works.
  CHECK(l.shifted(-1.0).at(2, 2) == -1.0);
}

TEST_CASE("laplacian is symmetric with spectrum in [0, 2]") {
  Rng rng(11);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 2 + rng.below(40);
    const Graph g = erdos_renyi_graph(n, rng.uniform(0.0, 0.5), seed);
    const Matrix d = normalized_laplacian(g).to_dense();
    CHECK(max_abs_diff(d, transpose(d)) <= 1e-12);
    const auto eig = eigendecompose_dense(d);
    CHECK(eig.eigenvalues.front() >= -1e-8);
    CHECK(eig.eigenvalues.back() <= 2.0 + 1e-8);
  }
}

TEST_CASE("spmm small cases") {
  const Matrix x = Matrix::from_rows({{1.5, -2.0}, {0.25, 4.0}, {3.0, 1.0}});
  CHECK(spmm(SparseSymMatrix::identity(3), x) == x);

  const SparseSymMatrix l = normalized_laplacian(from_edges({{0, 1}}, 2));
  CHECK(spmm(l, Matrix::from_rows({{1}, {0}})) == Matrix::from_rows({{1}, {-1}}));
}

TEST_CASE("spmm matches dense multiplication") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    Matrix dense(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        if (i == j || rng.bernoulli(0.1)) dense(i, j) = dense(j, i) = rng.uniform(-1.0, 1.0);
    const SparseSymMatrix m = SparseSymMatrix::from_dense(dense);
    Matrix x(n, 3);
    for (double& v : x.data()) v = rng.normal();
    CHECK(max_abs_diff(spmm(m, x), matmul(dense, x)) < 1e-12);
  }
}

TEST_CASE("spmm_into rejects aliasing") {
  const SparseSymMatrix m = SparseSymMatrix::identity(2);
  Matrix x(2, 1, 1.0);
  CHECK_THROWS(spmm_into(m, x, x));
}

TEST_CASE("sparse matrix validation") {
  // Asymmetric values.
  CHECK_THROWS(SparseSymMatrix({0, 2, 4}, {0, 1, 0, 1}, {1.0, 2.0, 3.0, 1.0}));
  // Unsorted columns.
  CHECK_THROWS(SparseSymMatrix({0, 2, 4}, {1, 0, 0, 1}, {2.0, 1.0, 2.0, 1.0}));
  CHECK_NOTHROW(SparseSymMatrix({0, 2, 4}, {0, 1, 0, 1}, {1.0, 2.0, 2.0, 1.0}));
}

TEST_CASE("grid graph shapes") {
  const Graph g12 = grid_graph(1, 2);
  CHECK(g12 == from_edges({{0, 1}}, 2));

  const Graph g22 = grid_graph(2, 2);
  CHECK(g22.num_stored_edges() == 8);
  for (NodeId u = 0; u < 4; ++u) CHECK(g22.degree(u) == 2);

  const Graph g33 = grid_graph(3, 3);
  CHECK(g33.num_nodes() == 9);
  CHECK(g33.num_stored_edges() == 24);

  const Graph g = grid_graph(7, 5);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    CHECK(g.degree(u) >= 2);
    CHECK(g.degree(u) <= 4);
  }
  for (NodeId corner : {NodeId{0}, NodeId{4}, NodeId{30}, NodeId{34}}) CHECK(g.degree(corner) == 2);

  CHECK_THROWS(grid_graph(0, 3));
}

TEST_CASE("stochastic block model") {
  const std::vector<std::size_t> small{3, 3};
  const SbmGraph cliques = sbm_graph(small, 1.0, 0.0, 1);
  CHECK(cliques.graph == from_edges({{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}}, 6));
  CHECK(cliques.block_of == std::vector<int>{0, 0, 0, 1, 1, 1});

  const SbmGraph empty = sbm_graph(small, 0.0, 0.0, 1);
  CHECK(empty.graph.num_stored_edges() == 0);

  const std::vector<std::size_t> big{100, 100};
  const SbmGraph half = sbm_graph(big, 0.5, 0.0, 3);
  const double pairs = 2.0 * 100 * 99 / 2;
  const double mean = 0.5 * pairs;
  const double sigma = std::sqrt(pairs * 0.25);
  const double edges = static_cast<double>(half.graph.num_stored_edges()) / 2.0;
  CHECK(std::abs(edges - mean) < 4.0 * sigma);
}

TEST_CASE("edge list round trip and comments") {
  std::istringstream in("# a comment\n0 1\n\n1 2  # trailing\n");
  const Graph g = read_edge_list(in);
  CHECK(g == from_edges({{0, 1}, {1, 2}}, 3));

  std::ostringstream out;
  write_edge_list(out, g);
  std::istringstream back(out.str());
  CHECK(read_edge_list(back) == g);

  std::istringstream with_isolated("0 1\n");
  CHECK(read_edge_list(with_isolated, 4).num_nodes() == 4);

  // The node-count header keeps trailing isolated nodes.
  const EdgeList e{{0, 1}};
  const Graph padded = build_graph(e, 5);
  std::ostringstream padded_out;
  write_edge_list(padded_out, padded);
  std::istringstream padded_in(padded_out.str());
  CHECK(read_edge_list(padded_in) == padded);
}

TEST_CASE("edge list errors name the line") {
  std::istringstream bad("0 1\n1 x\n");
  try {
    read_edge_list(bad, std::nullopt, "edges.txt");
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("edges.txt:2") != std::string::npos);
  }
}
