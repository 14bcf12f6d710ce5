#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ergnn {

struct RunRecord {
  std::string task;
  std::string subject;  // filter kind or dataset name
  std::string variant;
  std::uint64_t seed = 0;
  std::string metric_name;  // "mse" or "test_accuracy"
  double metric = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double wall_time_s = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) convention; 0 for a single value
  std::size_t count = 0;
};

/// Two-pass mean and sample standard deviation.
Aggregate aggregate(std::span<const double> values);

struct RunMetrics {
  std::vector<RunRecord> runs;  // seed order

  std::vector<double> values() const;
  Aggregate summary() const { return aggregate(values()); }
};

/// One JSON object per line. Timing is optional so reruns can be compared
/// byte for byte.
std::string to_json_line(const RunRecord& record, bool include_timing = true);
std::string aggregate_json_line(const RunMetrics& metrics);
std::string summary_table(const RunMetrics& metrics);

}  // namespace ergnn
