#include "ergnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "ergnn/chebyshev.hpp"
#include "ergnn/model.hpp"
#include "ergnn/rng.hpp"

namespace ergnn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

TrainOptions train_options(const ExperimentConfig& cfg, TaskMode mode) {
  TrainOptions o;
  o.dense.lr = cfg.lr;
  o.dense.weight_decay = cfg.weight_decay;
  o.filter.lr = cfg.filter_lr;
  o.filter.weight_decay = cfg.filter_weight_decay;
  o.loss.mode = mode;
  o.loss.weights = {cfg.eta, cfg.xi};
  o.loss.detach_reg_target = cfg.detach_reg_target;
  return o;
}

ModelConfig model_config(const ExperimentConfig& cfg, std::size_t in_features, std::size_t out_width) {
  ModelConfig m;
  m.in_features = in_features;
  m.out_width = out_width;
  m.k_num = cfg.k_num;
  m.k_den = cfg.k_den;
  m.mlp_layers = cfg.mlp_layers;
  m.mlp_hidden = cfg.mlp_hidden;
  m.dropout = cfg.dropout;
  m.variant = cfg.variant;
  return m;
}

double mean_squared_error(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) s += (da[i] - db[i]) * (da[i] - db[i]);
  return s / static_cast<double>(da.size());
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

double accuracy(const Matrix& logits, const std::vector<int>& labels, const ad::NodeSet& nodes) {
  std::size_t hits = 0;
  for (std::size_t i : nodes)
    if (argmax(logits.row(i)) == static_cast<std::size_t>(labels[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

double mean_ce(const Matrix& logits, const std::vector<int>& labels, const ad::NodeSet& nodes) {
  double total = 0.0;
  for (std::size_t i : nodes) {
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    total += mx + std::log(z) - row[static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(nodes.size());
}

}  // namespace

std::size_t worker_count() {
  if (const char* env = std::getenv("ERGNN_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SplitMasks make_splits(std::size_t num_labeled, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("make_splits: negative ratio");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("make_splits: ratios must sum to 1");

  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    // Nudge up so exact products such as 10 * 0.6 are not floored to 5.
    sizes[i] = static_cast<std::size_t>(std::floor(static_cast<double>(num_labeled) * ratios[i] + 1e-9));
    assigned += sizes[i];
  }
  for (std::size_t i = 0; assigned < num_labeled; i = (i + 1) % 3, ++assigned) ++sizes[i];
  for (std::size_t i = 0; i < 3; ++i) {
    if (sizes[i] == 0) {
      static const char* names[] = {"train", "validation", "test"};
      throw std::invalid_argument(std::string("make_splits: empty ") + names[i] + " split for " +
                                  std::to_string(num_labeled) + " nodes");
    }
  }

  std::vector<std::size_t> order(num_labeled);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = num_labeled; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  SplitMasks s;
  auto first = order.begin();
  s.train.assign(first, first + static_cast<std::ptrdiff_t>(sizes[0]));
  first += static_cast<std::ptrdiff_t>(sizes[0]);
  s.val.assign(first, first + static_cast<std::ptrdiff_t>(sizes[1]));
  first += static_cast<std::ptrdiff_t>(sizes[1]);
  s.test.assign(first, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

FilterLearningSetup prepare_filter_learning(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n = config.grid_rows * config.grid_cols;
  if (n > config.dense_limit) {
    throw EigenError("filter learning: grid of " + std::to_string(n) + " nodes exceeds the dense oracle limit " +
                     std::to_string(config.dense_limit));
  }
  FilterLearningSetup s;
  s.graph = grid_graph(config.grid_rows, config.grid_cols);
  s.laplacian = normalized_laplacian(s.graph);
  s.lhat = shift_laplacian(s.laplacian);
  EigenOptions eo;
  eo.dense_limit = config.dense_limit;
  s.spectrum = eigendecompose(s.laplacian, eo);
  return s;
}

RunMetrics run_filter_learning(const ExperimentConfig& config, const FilterLearningSetup& setup,
                               const std::optional<TargetFilter>& target) {
  config.validate();
  if (!target && !config.target_filter) throw std::invalid_argument("filter learning needs a target filter");
  const TargetFilter filter = target ? *target : TargetFilter(*config.target_filter);
  const std::size_t n = setup.graph.num_nodes();
  const ad::NodeSet everyone = ad::all_nodes(n);

  RunMetrics metrics;
  metrics.runs.resize(config.seeds.size());
  parallel_for(config.seeds.size(), [&](std::size_t idx) {
    const std::uint64_t seed = config.seeds[idx];
    const auto start = Clock::now();

    Rng signal_rng(derive_seed(seed, 1));
    Matrix x(n, 1);
    for (double& v : x.data()) v = signal_rng.uniform();
    const Targets y = exact_filter(setup.spectrum, filter, x);
    const Matrix& y_signal = std::get<Matrix>(y);

    RationalFilterParams params = init_params(model_config(config, 1, 1), derive_seed(seed, 2));
    const TrainOptions options = train_options(config, TaskMode::Regression);
    Trainer trainer(params, options);

    // Early stopping watches the training objective; the reported metric is
    // the prediction error at the best epoch.
    struct Snapshot {
      double objective;
      double mse;
    };
    auto evaluate = [&] {
      const LossEvaluation e = evaluate_loss(params, x, setup.lhat, y, everyone, options.loss, false, 0, false);
      return Snapshot{e.loss.total, mean_squared_error(e.outputs.z2, y_signal)};
    };
    Snapshot best = evaluate();
    std::size_t best_epoch = 0;
    std::size_t epoch = 0;
    while (epoch < config.max_epochs) {
      ++epoch;
      trainer.step(x, setup.lhat, y, everyone, derive_seed(seed, 1000 + epoch));
      const Snapshot now = evaluate();
      if (now.objective < best.objective) {
        best = now;
        best_epoch = epoch;
      }
      if (epoch - best_epoch >= config.patience) break;
    }
    const double best_mse = best.mse;

    RunRecord& r = metrics.runs[idx];
    r.task = to_string(Task::FilterLearning);
    r.subject = filter.name();
    r.variant = to_string(config.variant);
    r.seed = seed;
    r.metric_name = "mse";
    r.metric = best_mse;
    r.best_epoch = best_epoch;
    r.epochs_run = epoch;
    r.wall_time_s = seconds_since(start);
  });
  return metrics;
}

RunMetrics run_filter_learning(const ExperimentConfig& config) {
  return run_filter_learning(config, prepare_filter_learning(config));
}

DatasetBundle load_dataset(const ExperimentConfig& config) {
  if (config.graph == "sbm") {
    return synthetic_sbm_dataset(config.sbm_blocks, config.sbm_p_in, config.sbm_p_out, config.feature_noise,
                                 config.data_seed);
  }
  if (config.graph == "files") {
    if (config.edges_path.empty() || config.features_path.empty() || config.labels_path.empty())
      throw ConfigError("graph = files needs edges, features and labels paths");
    return ingest_dataset(config.edges_path, config.features_path, std::filesystem::path(config.labels_path));
  }
  throw ConfigError("node classification needs graph = sbm or graph = files");
}

RunMetrics run_node_classification(const ExperimentConfig& config, const DatasetBundle& data) {
  config.validate();
  if (!data.has_labels()) throw std::invalid_argument("node classification needs labels");
  const std::size_t n = data.graph.num_nodes();
  const SparseSymMatrix lhat = shift_laplacian(normalized_laplacian(data.graph));
  const Targets y = data.labels;

  RunMetrics metrics;
  metrics.runs.resize(config.seeds.size());
  parallel_for(config.seeds.size(), [&](std::size_t idx) {
    const std::uint64_t seed = config.seeds[idx];
    const auto start = Clock::now();
    const SplitMasks split = make_splits(n, config.split, derive_seed(seed, 0));

    std::vector<bool> present(data.class_count, false);
    for (std::size_t i : split.train) present[static_cast<std::size_t>(data.labels[i])] = true;
    for (std::size_t c = 0; c < data.class_count; ++c) {
      if (!present[c]) {
        std::cerr << "warning: class " << c << " absent from the training split (seed " << seed << ")\n";
      }
    }

    RationalFilterParams params =
        init_params(model_config(config, data.features.cols(), data.class_count), derive_seed(seed, 2));
    Trainer trainer(params, train_options(config, TaskMode::Classification));

    RationalFilterParams best = params;
    double best_acc = -1.0;
    double best_loss = INFINITY;
    std::size_t best_epoch = 0;
    std::size_t epoch = 0;
    while (epoch < config.max_epochs) {
      ++epoch;
      trainer.step(data.features, lhat, y, split.train, derive_seed(seed, 1000 + epoch));
      const Matrix z2 = forward(params, data.features, lhat).z2;
      const double acc = accuracy(z2, data.labels, split.val);
      const double vloss = mean_ce(z2, data.labels, split.val);
      if (acc > best_acc || (acc == best_acc && vloss < best_loss)) {
        best_acc = acc;
        best_loss = vloss;
        best_epoch = epoch;
        best = params;
      }
      if (epoch - best_epoch >= config.patience) break;
    }

    const Matrix z2 = forward(best, data.features, lhat).z2;
    RunRecord& r = metrics.runs[idx];
    r.task = to_string(Task::NodeClassification);
    r.subject = data.name;
    r.variant = to_string(config.variant);
    r.seed = seed;
    r.metric_name = "test_accuracy";
    r.metric = accuracy(z2, data.labels, split.test);
    r.best_epoch = best_epoch;
    r.epochs_run = epoch;
    r.wall_time_s = seconds_since(start);
  });
  return metrics;
}

TheoremReport run_theorem_check(const ExperimentConfig& config) {
  config.validate();
  if (!config.target_filter) throw std::invalid_argument("theorem check needs a target filter");
  TheoremCheckOptions o;
  o.k_num = config.k_num;
  o.k_den = config.k_den;
  o.grid_points = config.theorem_grid_points;
  o.clamp = config.theorem_clamp;
  return run_theorem_check(TargetFilter(*config.target_filter), o);
}

}  // namespace ergnn
