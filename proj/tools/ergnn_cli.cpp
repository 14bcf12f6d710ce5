#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ergnn/config.hpp"
#include "ergnn/dataset.hpp"
#include "ergnn/harness.hpp"
#include "ergnn/metrics.hpp"
#include "ergnn/oracle_suite.hpp"
#include "ergnn/spectral.hpp"
#include "ergnn/theorem_check.hpp"

namespace {

using namespace ergnn;

struct CommonFlags {
  std::string config_path;
  std::string metrics_path;
  std::string variant;
  bool print_config = false;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key = value configuration file (defaults apply when omitted)");
  cmd->add_option("--metrics", flags.metrics_path, "append line-delimited JSON records to this file ('-' for stdout)");
  cmd->add_option("--variant", flags.variant, "ergnn | numerator-only | plain-mlp (overrides the config)");
  cmd->add_flag("--print-config", flags.print_config, "echo the effective configuration before running");
  cmd->add_flag("--no-timing", flags.no_timing, "omit wall time from metric records");
}

ExperimentConfig load_config(const CommonFlags& flags, Task task) {
  ExperimentConfig cfg =
      flags.config_path.empty() ? ExperimentConfig::defaults_for(task) : parse_config(flags.config_path, task);
  if (cfg.task != task)
    throw ConfigError("config task '" + to_string(cfg.task) + "' does not match subcommand '" + to_string(task) + "'");
  if (!flags.variant.empty()) cfg.variant = parse_model_variant(flags.variant);
  cfg.validate();
  return cfg;
}

void emit(const RunMetrics& metrics, const CommonFlags& flags) {
  std::cout << summary_table(metrics);
  if (flags.metrics_path.empty()) return;
  auto write = [&](std::ostream& out) {
    for (const auto& r : metrics.runs) out << to_json_line(r, !flags.no_timing) << '\n';
    out << aggregate_json_line(metrics) << '\n';
  };
  if (flags.metrics_path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(flags.metrics_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open metrics file " + flags.metrics_path);
  write(out);
}

void print_theorem_report(const TheoremReport& r) {
  std::printf("filter %s\n", r.filter.c_str());
  std::printf("  polynomial grid mse   %.6e (max %.6e)\n", r.polynomial_error, r.polynomial_max_error);
  std::printf("  rational grid mse     %.6e (max %.6e)\n", r.rational_error, r.rational_max_error);
  std::printf("  min |q(lambda)|       %.6e%s\n", r.min_abs_denominator, r.degenerate ? "  [clamp binding]" : "");
  std::printf("  iterations            %d (clamp rejections %d)\n", r.iterations, r.clamp_rejections);
  std::printf("  rational <= polynomial: %s\n", r.monotone() ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicitly optimized rational graph filters"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string filter_name;

  auto* filter_cmd = app.add_subcommand("filter-learn", "fit a target spectral filter on a grid graph");
  add_common(filter_cmd, flags);
  filter_cmd->add_option("--filter", filter_name, "low | high | band | reject | comb");

  auto* classify_cmd = app.add_subcommand("classify", "transductive node classification");
  add_common(classify_cmd, flags);
  std::string edges, features, labels, synthetic;
  std::vector<std::size_t> blocks;
  std::optional<double> p_in, p_out, noise;
  std::optional<std::uint64_t> data_seed;
  classify_cmd->add_option("--edges", edges, "edge list file");
  classify_cmd->add_option("--features", features, "CSV feature file, one row per node");
  classify_cmd->add_option("--labels", labels, "one integer label per line");
  classify_cmd->add_option("--synthetic", synthetic, "generate the dataset instead (only 'sbm')");
  classify_cmd->add_option("--blocks", blocks, "SBM block sizes");
  classify_cmd->add_option("--p-in", p_in, "SBM within-block edge probability");
  classify_cmd->add_option("--p-out", p_out, "SBM cross-block edge probability");
  classify_cmd->add_option("--noise", noise, "standard deviation of feature noise");
  classify_cmd->add_option("--data-seed", data_seed, "seed of the synthetic graph and features");

  auto* theorem_cmd = app.add_subcommand("theorem-check", "polynomial vs rational fit of a target response");
  add_common(theorem_cmd, flags);
  theorem_cmd->add_option("--filter", filter_name, "low | high | band | reject | comb");

  auto* oracle_cmd = app.add_subcommand("oracle-suite", "run the built-in correctness checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << '\n' << app.help();
    return code;
  }

  try {
    if (*filter_cmd) {
      ExperimentConfig cfg = load_config(flags, Task::FilterLearning);
      if (!filter_name.empty()) cfg.target_filter = parse_filter_kind(filter_name);
      if (!cfg.target_filter) throw ConfigError("filter-learn needs --filter or target_filter in the config");
      if (flags.print_config) std::cout << to_text(cfg) << '\n';
      emit(run_filter_learning(cfg), flags);
      return 0;
    }
    if (*classify_cmd) {
      ExperimentConfig cfg = load_config(flags, Task::NodeClassification);
      if (!synthetic.empty()) {
        if (synthetic != "sbm") throw ConfigError("unknown synthetic generator '" + synthetic + "'");
        cfg.graph = "sbm";
      } else if (!edges.empty() || !features.empty() || !labels.empty()) {
        if (edges.empty() || features.empty() || labels.empty())
          throw ConfigError("classify needs all of --edges, --features and --labels");
        cfg.graph = "files";
        cfg.edges_path = edges;
        cfg.features_path = features;
        cfg.labels_path = labels;
      }
      if (!blocks.empty()) cfg.sbm_blocks = blocks;
      if (p_in) cfg.sbm_p_in = *p_in;
      if (p_out) cfg.sbm_p_out = *p_out;
      if (noise) cfg.feature_noise = *noise;
      if (data_seed) cfg.data_seed = *data_seed;
      cfg.validate();
      if (flags.print_config) std::cout << to_text(cfg) << '\n';
      const DatasetBundle data = load_dataset(cfg);
      emit(run_node_classification(cfg, data), flags);
      return 0;
    }
    if (*theorem_cmd) {
      ExperimentConfig cfg = load_config(flags, Task::TheoremCheck);
      if (!filter_name.empty()) cfg.target_filter = parse_filter_kind(filter_name);
      if (flags.print_config) std::cout << to_text(cfg) << '\n';
      bool ok = true;
      if (cfg.target_filter) {
        const TheoremReport r = run_theorem_check(cfg);
        print_theorem_report(r);
        ok = r.monotone();
      } else {
        for (FilterKind kind : kAllFilterKinds) {
          cfg.target_filter = kind;
          const TheoremReport r = run_theorem_check(cfg);
          print_theorem_report(r);
          ok = ok && r.monotone();
        }
      }
      return ok ? 0 : 1;
    }
    if (*oracle_cmd) {
      const OracleReport report = run_oracle_suite();
      for (const auto& c : report.checks)
        std::printf("%s  %-48s %s (%.2fs)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str(),
                    c.seconds);
      std::printf("%zu checks in %.2fs: %s\n", report.checks.size(), report.seconds,
                  report.passed() ? "all passed" : "FAILURES");
      return report.passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
