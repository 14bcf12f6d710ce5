#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergnn/graph.hpp"
#include "ergnn/matrix.hpp"

namespace ergnn {

struct DatasetBundle {
  std::string name;
  Graph graph;
  Matrix features;
  std::vector<int> labels;  // empty when unlabeled
  std::size_t class_count = 0;

  bool has_labels() const noexcept { return !labels.empty(); }
};

/// CSV, one row per node, decimal reals.
Matrix read_features_csv(std::istream& in, const std::string& source_name = "<features>");
/// One non-negative integer per line.
std::vector<int> read_labels(std::istream& in, const std::string& source_name = "<labels>");

/// Node count comes from the edge list (max index + 1) unless `num_nodes` is
/// given; feature and label row counts must match it.
DatasetBundle ingest_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                             const std::optional<std::filesystem::path>& label_path = std::nullopt,
                             std::optional<std::size_t> num_nodes = std::nullopt);

/// SBM graph with block labels and noisy one-hot features:
/// features = onehot(label) + noise * N(0, 1).
DatasetBundle synthetic_sbm_dataset(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                                    double feature_noise, std::uint64_t seed);

}  // namespace ergnn
