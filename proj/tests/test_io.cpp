#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ergnn/checkpoint.hpp"
#include "ergnn/dataset.hpp"
#include "ergnn/metrics.hpp"
#include "ergnn/model.hpp"
#include "ergnn/rng.hpp"
#include "json.hpp"

using namespace ergnn;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("ergnn_io_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

std::string ingest_error(const TempDir& d, const std::string& edges, const std::string& feats,
                         const std::string& labels) {
  try {
    ingest_dataset(d.write("e.txt", edges), d.write("f.csv", feats), d.write("l.txt", labels));
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("ingest the smallest dataset") {
  TempDir d;
  const DatasetBundle b =
      ingest_dataset(d.write("e.txt", "# P2\n0 1\n"), d.write("f.csv", "1.0\n0.0\n"), d.write("l.txt", "0\n1\n"));
  CHECK(b.graph.num_nodes() == 2);
  CHECK(b.graph.num_stored_edges() == 2);
  CHECK(b.features == Matrix::from_rows({{1.0}, {0.0}}));
  CHECK(b.labels == std::vector<int>{0, 1});
  CHECK(b.class_count == 2);

  const DatasetBundle unlabeled = ingest_dataset(d.path / "e.txt", d.path / "f.csv");
  CHECK_FALSE(unlabeled.has_labels());
}

TEST_CASE("ingestion diagnostics name file and line") {
  TempDir d;
  CHECK(ingest_error(d, "0 1\n", "1.0\n0.0\n2.0\n", "0\n1\n").find("3") != std::string::npos);
  CHECK_FALSE(ingest_error(d, "0 1\n", "1.0\n0.0\n", "0\n").empty());

  const std::string bad_feature = ingest_error(d, "0 1\n", "1.0, 2.0\n0.5, abc\n", "0\n1\n");
  CHECK(bad_feature.find("f.csv:2") != std::string::npos);

  const std::string ragged = ingest_error(d, "0 1\n", "1.0, 2.0\n0.5\n", "0\n1\n");
  CHECK(ragged.find("f.csv:2") != std::string::npos);

  const std::string bad_label = ingest_error(d, "0 1\n", "1.0\n0.0\n", "0\n-1\n");
  CHECK(bad_label.find("l.txt:2") != std::string::npos);

  const std::string bad_edge = ingest_error(d, "0 1\n1\n", "1.0\n0.0\n", "0\n1\n");
  CHECK(bad_edge.find("e.txt:2") != std::string::npos);

  CHECK_THROWS(ingest_dataset(d.path / "missing.txt", d.path / "f.csv"));
}

TEST_CASE("synthetic sbm dataset") {
  const std::vector<std::size_t> blocks{5, 7};
  const DatasetBundle b = synthetic_sbm_dataset(blocks, 1.0, 0.0, 0.0, 3);
  CHECK(b.graph.num_nodes() == 12);
  CHECK(b.class_count == 2);
  CHECK(b.features.cols() == 2);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(b.features(i, static_cast<std::size_t>(b.labels[i])) == 1.0);
    CHECK(b.features(i, 1 - static_cast<std::size_t>(b.labels[i])) == 0.0);
  }
  const DatasetBundle noisy = synthetic_sbm_dataset(blocks, 0.5, 0.1, 1.0, 3);
  CHECK(noisy.graph == synthetic_sbm_dataset(blocks, 0.5, 0.1, 1.0, 3).graph);
  CHECK(noisy.features == synthetic_sbm_dataset(blocks, 0.5, 0.1, 1.0, 3).features);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  ModelConfig mc;
  mc.in_features = 3;
  mc.out_width = 2;
  mc.k_num = 5;
  mc.k_den = 4;
  mc.mlp_layers = 3;
  mc.mlp_hidden = 7;
  mc.dropout = 0.25;
  mc.variant = ModelVariant::NumeratorOnly;
  RationalFilterParams p = init_params(mc, 11);
  Rng rng(1);
  for (auto& [name, m] : p.tensors())
    for (double& v : m->data()) v = rng.normal() * 1e3 + rng.uniform() * 1e-300;
  p.w(0, 0) = -0.0;
  p.b(0, 1) = 5e-324;

  std::stringstream s;
  save_checkpoint(s, p);
  const RationalFilterParams back = load_checkpoint(s);
  CHECK(back == p);
  CHECK(std::signbit(back.w(0, 0)));

  std::stringstream again;
  save_checkpoint(again, back);
  std::stringstream first;
  save_checkpoint(first, p);
  CHECK(again.str() == first.str());

  TempDir d;
  save_checkpoint(d.path / "model.ckpt", p);
  CHECK(load_checkpoint(d.path / "model.ckpt") == p);

  std::istringstream truncated(first.str().substr(0, first.str().size() / 2));
  CHECK_THROWS(load_checkpoint(truncated));
  std::istringstream garbage("not a checkpoint\n");
  CHECK_THROWS(load_checkpoint(garbage));
}

TEST_CASE("aggregates use two passes and the sample convention") {
  const std::vector<double> v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  const Aggregate a = aggregate(v);
  CHECK(a.mean == doctest::Approx(5.0));
  CHECK(a.stddev == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(a.count == 8);

  const std::vector<double> one{3.5};
  CHECK(aggregate(one).stddev == 0.0);

  // Large offsets would wreck a one-pass sum of squares.
  const std::vector<double> offset{1e9 + 1, 1e9 + 2, 1e9 + 3};
  CHECK(aggregate(offset).stddev == doctest::Approx(1.0));
}

TEST_CASE("metric records serialize as one JSON object per line") {
  RunMetrics m;
  for (std::uint64_t s = 0; s < 3; ++s) {
    RunRecord r;
    r.task = "filter-learning";
    r.subject = "comb";
    r.variant = "ergnn";
    r.seed = s;
    r.metric_name = "mse";
    r.metric = 0.1 * static_cast<double>(s + 1);
    r.best_epoch = 10 + s;
    r.epochs_run = 20 + s;
    r.wall_time_s = 1.5;
    m.runs.push_back(r);
  }
  const std::string line = to_json_line(m.runs[1]);
  CHECK(line.find('\n') == std::string::npos);
  const auto j = nlohmann::json::parse(line);
  CHECK(j["seed"] == 1);
  CHECK(j["value"].get<double>() == 0.2);
  CHECK(j["best_epoch"] == 11);
  CHECK(j.contains("wall_time_s"));
  CHECK_FALSE(nlohmann::json::parse(to_json_line(m.runs[1], false)).contains("wall_time_s"));

  const auto agg = nlohmann::json::parse(aggregate_json_line(m));
  CHECK(agg["runs"] == 3);
  CHECK(agg["mean"].get<double>() == doctest::Approx(0.2));

  const std::string table = summary_table(m);
  CHECK(table.find("comb") != std::string::npos);
  CHECK(table.find("over 3 runs") != std::string::npos);
}
