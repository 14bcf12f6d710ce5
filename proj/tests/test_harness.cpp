#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <set>

#include "doctest.h"
#include "ergnn/harness.hpp"
#include "ergnn/oracle_suite.hpp"
#include "ergnn/rng.hpp"

using namespace ergnn;

namespace {

std::set<std::size_t> as_set(const ad::NodeSet& s) { return {s.begin(), s.end()}; }

ExperimentConfig small_filter_config() {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(Task::FilterLearning);
  cfg.grid_rows = 8;
  cfg.grid_cols = 8;
  cfg.k_num = 4;
  cfg.k_den = 4;
  cfg.mlp_hidden = 16;
  cfg.max_epochs = 150;
  cfg.patience = 40;
  cfg.seeds = {0, 1};
  cfg.target_filter = FilterKind::Low;
  return cfg;
}

}  // namespace

TEST_CASE("split sizes") {
  const std::array<double, 3> r{0.6, 0.2, 0.2};
  const SplitMasks ten = make_splits(10, r, 1);
  CHECK(ten.train.size() == 6);
  CHECK(ten.val.size() == 2);
  CHECK(ten.test.size() == 2);

  const SplitMasks eleven = make_splits(11, r, 1);
  CHECK(eleven.train.size() == 7);
  CHECK(eleven.val.size() == 2);
  CHECK(eleven.test.size() == 2);

  CHECK_THROWS(make_splits(2, r, 1));
}

TEST_CASE("splits are disjoint, cover every node and depend only on the seed") {
  const std::array<double, 3> r{0.6, 0.2, 0.2};
  for (std::size_t n : {5, 17, 100, 2708}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const SplitMasks s = make_splits(n, r, seed);
      std::set<std::size_t> all = as_set(s.train);
      all.insert(s.val.begin(), s.val.end());
      all.insert(s.test.begin(), s.test.end());
      CHECK(all.size() == n);
      CHECK(s.train.size() + s.val.size() + s.test.size() == n);
      CHECK(*all.rbegin() == n - 1);
      const SplitMasks again = make_splits(n, r, seed);
      CHECK(again.train == s.train);
      CHECK(again.val == s.val);
      CHECK(again.test == s.test);
    }
  }
  CHECK(make_splits(100, r, 1).train != make_splits(100, r, 2).train);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<std::atomic<int>> hits(37);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK(worker_count() >= 1);
}

TEST_CASE("identity target is exactly representable from the initial filter") {
  ExperimentConfig cfg = small_filter_config();
  const FilterLearningSetup setup = prepare_filter_learning(cfg);
  ModelConfig mc;
  mc.in_features = 1;
  mc.out_width = 1;
  mc.k_num = cfg.k_num;
  mc.k_den = cfg.k_den;
  mc.mlp_layers = 2;
  mc.mlp_hidden = 2;
  RationalFilterParams p = init_params(mc, 3);
  // gamma_num and gamma_den are untouched; only the dense layers are pinned.
  p.w = Matrix::from_rows({{1.0}});
  p.mlp[0].w = Matrix::from_rows({{1.0, -1.0}});
  p.mlp[1].w = Matrix::from_rows({{1.0}, {-1.0}});
  p.mlp[0].b = Matrix(1, 2);
  p.mlp[1].b = Matrix(1, 1);

  Rng rng(11);
  Matrix x(setup.graph.num_nodes(), 1);
  for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
  const auto one = TargetFilter::custom([](double) { return 1.0; }, "identity");
  const Matrix y = exact_filter(setup.spectrum, one, x);
  const ForwardOutputs out = forward(p, x, setup.lhat);
  CHECK(out.z1 == x);
  double worst = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) worst = std::max(worst, std::abs(out.z2(i, 0) - y(i, 0)));
  CHECK(worst < 1e-7);
}

TEST_CASE("filter learning drives an identity target below 1e-6") {
  // From a random Glorot start the input weight may need to change sign,
  // which takes longer than a couple of hundred epochs on some seeds.
  ExperimentConfig cfg = small_filter_config();
  cfg.max_epochs = 2000;
  cfg.patience = 250;
  const FilterLearningSetup setup = prepare_filter_learning(cfg);
  const auto one = TargetFilter::custom([](double) { return 1.0; }, "identity");
  for (ModelVariant v : {ModelVariant::NumeratorOnly, ModelVariant::Ergnn}) {
    cfg.variant = v;
    const RunMetrics m = run_filter_learning(cfg, setup, one);
    for (const auto& r : m.runs) {
      CAPTURE(to_string(v));
      CAPTURE(r.seed);
      CHECK(r.metric < 1e-6);
      CHECK(r.subject == "identity");
    }
  }
}

TEST_CASE("filter learning records obey the early-stopping rule and are reproducible") {
  ExperimentConfig cfg = small_filter_config();
  const RunMetrics a = run_filter_learning(cfg);
  REQUIRE(a.runs.size() == 2);
  for (const auto& r : a.runs) {
    CHECK(r.epochs_run == std::min(cfg.max_epochs, r.best_epoch + cfg.patience));
    CHECK(r.metric_name == "mse");
    CHECK(r.metric >= 0.0);
  }
  const RunMetrics b = run_filter_learning(cfg);
  for (std::size_t i = 0; i < a.runs.size(); ++i)
    CHECK(to_json_line(a.runs[i], false) == to_json_line(b.runs[i], false));
  CHECK(a.summary().count == 2);
  CHECK(a.summary().stddev >= 0.0);
}

TEST_CASE("filter learning refuses grids above the dense limit") {
  ExperimentConfig cfg = small_filter_config();
  cfg.dense_limit = 50;
  CHECK_THROWS_AS(prepare_filter_learning(cfg), EigenError);
}

TEST_CASE("two disjoint cliques are classified perfectly") {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(Task::NodeClassification);
  cfg.sbm_blocks = {20, 20};
  cfg.sbm_p_in = 1.0;
  cfg.sbm_p_out = 0.0;
  cfg.seeds = {0, 1, 2, 3, 4};
  const DatasetBundle data = load_dataset(cfg);
  const RunMetrics m = run_node_classification(cfg, data);
  for (const auto& r : m.runs) {
    CHECK(r.metric == 1.0);
    CHECK(r.epochs_run == std::min(cfg.max_epochs, r.best_epoch + cfg.patience));
  }
}

TEST_CASE("classification needs labels") {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(Task::NodeClassification);
  DatasetBundle unlabeled;
  unlabeled.graph = grid_graph(3, 3);
  unlabeled.features = Matrix(9, 2);
  CHECK_THROWS(run_node_classification(cfg, unlabeled));
}

TEST_CASE("theorem check through the config") {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(Task::TheoremCheck);
  cfg.target_filter = FilterKind::Comb;
  const TheoremReport r = run_theorem_check(cfg);
  CHECK(r.monotone());
  cfg.target_filter.reset();
  CHECK_THROWS(run_theorem_check(cfg));
}

TEST_CASE("oracle suite passes and is sensitive to coefficient errors") {
  const OracleReport clean = run_oracle_suite();
  for (const auto& c : clean.checks) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    CHECK(c.passed);
  }
  CHECK(clean.passed());
  CHECK(clean.seconds < 60.0);

  OracleSuiteOptions perturbed;
  perturbed.coefficient_perturbation = 1e-3;
  const OracleReport bad = run_oracle_suite(perturbed);
  CHECK_FALSE(bad.passed());
  const auto it = std::find_if(bad.checks.begin(), bad.checks.end(), [](const OracleCheck& c) {
    return c.name.find("chebyshev recurrence") != std::string::npos;
  });
  REQUIRE(it != bad.checks.end());
  CHECK_FALSE(it->passed);
}
