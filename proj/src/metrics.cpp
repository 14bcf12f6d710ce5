#include "ergnn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>

namespace ergnn {

Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

std::vector<double> RunMetrics::values() const {
  std::vector<double> v;
  v.reserve(runs.size());
  for (const auto& r : runs) v.push_back(r.metric);
  return v;
}

std::string to_json_line(const RunRecord& record, bool include_timing) {
  nlohmann::ordered_json j;
  j["record"] = "run";
  j["task"] = record.task;
  j["subject"] = record.subject;
  j["variant"] = record.variant;
  j["seed"] = record.seed;
  j["metric"] = record.metric_name;
  j["value"] = record.metric;
  j["best_epoch"] = record.best_epoch;
  j["epochs_run"] = record.epochs_run;
  if (include_timing) j["wall_time_s"] = record.wall_time_s;
  return j.dump();
}

std::string aggregate_json_line(const RunMetrics& metrics) {
  const Aggregate a = metrics.summary();
  nlohmann::ordered_json j;
  j["record"] = "aggregate";
  if (!metrics.runs.empty()) {
    j["task"] = metrics.runs.front().task;
    j["subject"] = metrics.runs.front().subject;
    j["variant"] = metrics.runs.front().variant;
    j["metric"] = metrics.runs.front().metric_name;
  }
  j["mean"] = a.mean;
  j["std"] = a.stddev;
  j["runs"] = a.count;
  return j.dump();
}

std::string summary_table(const RunMetrics& metrics) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %-16s %-14s %12s %10s %10s %9s\n", "seed", "subject", "variant", "metric",
                "best_ep", "epochs", "time_s");
  out += buf;
  for (const auto& r : metrics.runs) {
    std::snprintf(buf, sizeof buf, "%-8llu %-16s %-14s %12.6g %10zu %10zu %9.2f\n",
                  static_cast<unsigned long long>(r.seed), r.subject.c_str(), r.variant.c_str(), r.metric,
                  r.best_epoch, r.epochs_run, r.wall_time_s);
    out += buf;
  }
  const Aggregate a = metrics.summary();
  const std::string name = metrics.runs.empty() ? "metric" : metrics.runs.front().metric_name;
  std::snprintf(buf, sizeof buf, "%s: %.6g +- %.6g over %zu runs\n", name.c_str(), a.mean, a.stddev, a.count);
  out += buf;
  return out;
}

}  // namespace ergnn
