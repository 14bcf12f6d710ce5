#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "ergnn/autodiff.hpp"
#include "ergnn/config.hpp"
#include "ergnn/dataset.hpp"
#include "ergnn/graph.hpp"
#include "ergnn/metrics.hpp"
#include "ergnn/spectral.hpp"
#include "ergnn/theorem_check.hpp"

namespace ergnn {

struct SplitMasks {
  ad::NodeSet train;
  ad::NodeSet val;
  ad::NodeSet test;
};

/// Shuffles 0..num_labeled-1 with `seed` and cuts it by `ratios`. Sizes are
/// floor(n * r); leftover nodes go round-robin starting with train. Throws
/// std::invalid_argument when any part would be empty.
SplitMasks make_splits(std::size_t num_labeled, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Graph, Laplacian and spectrum shared by every seed of a filter-learning
/// run. The eigendecomposition is the expensive part.
struct FilterLearningSetup {
  Graph graph;
  SparseSymMatrix laplacian;
  SparseSymMatrix lhat;
  SpectralDecomposition spectrum;
};

FilterLearningSetup prepare_filter_learning(const ExperimentConfig& config);

/// Fits x -> f*(L) x on a grid graph in regression mode, one uniform [0, 1]
/// input signal per seed, training on all nodes. The metric is the mean
/// squared error of the prediction z2 at the epoch with the lowest training
/// objective. `target` overrides config.target_filter.
RunMetrics run_filter_learning(const ExperimentConfig& config, const FilterLearningSetup& setup,
                               const std::optional<TargetFilter>& target = std::nullopt);
RunMetrics run_filter_learning(const ExperimentConfig& config);

/// Transductive classification: per seed a fresh split, training with
/// early stopping on validation accuracy, best-validation parameters
/// restored, test accuracy reported.
RunMetrics run_node_classification(const ExperimentConfig& config, const DatasetBundle& data);
/// Builds the dataset described by the config (sbm or files).
DatasetBundle load_dataset(const ExperimentConfig& config);

TheoremReport run_theorem_check(const ExperimentConfig& config);

/// Worker count for independent runs: ERGNN_WORKERS if set, else the
/// hardware concurrency.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) across worker_count() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ergnn
