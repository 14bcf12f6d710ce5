#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergnn/model.hpp"
#include "ergnn/spectral.hpp"

namespace ergnn {

enum class Task { FilterLearning, NodeClassification, TheoremCheck };

std::string to_string(Task task);
Task parse_task(const std::string& name);

/// Declarative description of one experiment. Field defaults are the
/// filter-learning defaults; use defaults_for() for the other tasks.
struct ExperimentConfig {
  Task task = Task::FilterLearning;

  // Graph source: "grid", "sbm" or "files".
  std::string graph = "grid";
  std::size_t grid_rows = 30;
  std::size_t grid_cols = 30;
  std::vector<std::size_t> sbm_blocks{200, 200};
  double sbm_p_in = 0.02;
  double sbm_p_out = 0.1;
  double feature_noise = 1.0;
  std::uint64_t data_seed = 0;
  std::string edges_path;
  std::string features_path;
  std::string labels_path;

  // Model.
  std::size_t k_num = 10;
  std::size_t k_den = 10;
  std::size_t mlp_layers = 2;
  std::size_t mlp_hidden = 64;
  ModelVariant variant = ModelVariant::Ergnn;

  // Optimization.
  double lr = 0.01;
  double weight_decay = 0.0;
  double filter_lr = 0.01;
  double filter_weight_decay = 0.0;
  double dropout = 0.0;
  double eta = 1.0;
  double xi = 1.0;
  bool detach_reg_target = false;
  std::size_t max_epochs = 2000;
  std::size_t patience = 250;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  std::optional<FilterKind> target_filter;
  std::array<double, 3> split{0.6, 0.2, 0.2};

  // Theorem check.
  std::size_t theorem_grid_points = 2001;
  double theorem_clamp = 1e-3;

  std::size_t dense_limit = 3000;

  static ExperimentConfig defaults_for(Task task);

  /// Throws ConfigError on violated invariants.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `key = value` lines, `#` comments. Unspecified keys take the defaults of
/// the task named by the `task` key (or `default_task`). Unknown keys,
/// duplicate keys and malformed values throw ConfigError naming the line.
ExperimentConfig parse_config_text(const std::string& text, Task default_task,
                                   const std::string& source_name = "<config>");
ExperimentConfig parse_config(const std::filesystem::path& path, Task default_task);

/// Canonical text form listing every key; re-parses to an equal config.
std::string to_text(const ExperimentConfig& config);

/// Every key parse_config accepts.
const std::vector<std::string>& config_keys();

}  // namespace ergnn
