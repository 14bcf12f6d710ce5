#include "ergnn/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ergnn/rng.hpp"

namespace ergnn {

namespace {

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& what) {
  throw std::runtime_error(source + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open(const std::filesystem::path& p, const char* what) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error(p.string() + ": cannot open " + what);
  return in;
}

}  // namespace

Matrix read_features_csv(std::istream& in, const std::string& source_name) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      const std::string t = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(t.c_str(), &end);
      if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
        parse_error(source_name, line_no, "column " + std::to_string(count + 1) + ": '" + t + "' is not a finite real");
      values.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    else if (count != cols)
      parse_error(source_name, line_no, "expected " + std::to_string(cols) + " columns, found " + std::to_string(count));
    ++rows;
  }
  if (in.bad()) throw std::runtime_error(source_name + ": read failure");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data().begin());
  return m;
}

std::vector<int> read_labels(std::istream& in, const std::string& source_name) {
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string t = line.substr(b, e - b + 1);
    if (t.find_first_not_of("0123456789") != std::string::npos)
      parse_error(source_name, line_no, "label '" + t + "' is not a non-negative integer");
    errno = 0;
    const long v = std::strtol(t.c_str(), nullptr, 10);
    if (errno == ERANGE || v > 1000000) parse_error(source_name, line_no, "label '" + t + "' out of range");
    labels.push_back(static_cast<int>(v));
  }
  if (in.bad()) throw std::runtime_error(source_name + ": read failure");
  return labels;
}

DatasetBundle ingest_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                             const std::optional<std::filesystem::path>& label_path,
                             std::optional<std::size_t> num_nodes) {
  DatasetBundle bundle;
  bundle.name = edge_path.stem().string();
  bundle.graph = read_edge_list(edge_path, num_nodes);
  {
    auto in = open(feature_path, "feature file");
    bundle.features = read_features_csv(in, feature_path.string());
  }
  const std::size_t n = bundle.graph.num_nodes();
  if (bundle.features.rows() != n) {
    throw std::runtime_error(feature_path.string() + ": " + std::to_string(bundle.features.rows()) +
                             " feature rows for a graph with " + std::to_string(n) + " nodes");
  }
  if (label_path) {
    auto in = open(*label_path, "label file");
    bundle.labels = read_labels(in, label_path->string());
    if (bundle.labels.size() != n) {
      throw std::runtime_error(label_path->string() + ": " + std::to_string(bundle.labels.size()) +
                               " labels for a graph with " + std::to_string(n) + " nodes");
    }
    bundle.class_count = static_cast<std::size_t>(*std::max_element(bundle.labels.begin(), bundle.labels.end())) + 1;
  }
  return bundle;
}

DatasetBundle synthetic_sbm_dataset(std::span<const std::size_t> block_sizes, double p_in, double p_out,
                                    double feature_noise, std::uint64_t seed) {
  SbmGraph sbm = sbm_graph(block_sizes, p_in, p_out, derive_seed(seed, 0));
  DatasetBundle bundle;
  bundle.name = "sbm";
  bundle.graph = std::move(sbm.graph);
  bundle.labels = std::move(sbm.block_of);
  bundle.class_count = block_sizes.size();
  Rng rng(derive_seed(seed, 1));
  bundle.features = Matrix(bundle.labels.size(), bundle.class_count);
  for (std::size_t i = 0; i < bundle.labels.size(); ++i) {
    for (std::size_t c = 0; c < bundle.class_count; ++c) {
      const double hot = static_cast<std::size_t>(bundle.labels[i]) == c ? 1.0 : 0.0;
      bundle.features(i, c) = hot + feature_noise * rng.normal();
    }
  }
  return bundle;
}

}  // namespace ergnn
