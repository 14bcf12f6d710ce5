#include "ergnn/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ergnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& v) {
  if (v.empty()) throw std::invalid_argument("empty value");
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
    throw std::invalid_argument("'" + v + "' is not a finite real number");
  return d;
}

std::uint64_t to_u64(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("'" + v + "' is not a non-negative integer");
  errno = 0;
  const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw std::invalid_argument("'" + v + "' is out of range");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("'" + v + "' is not a boolean (true/false)");
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

struct KeyHandler {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define ERGNN_SIZE_KEY(key, field)                                                      \
  {key, {[](ExperimentConfig& c, const std::string& v) { c.field = to_u64(v); },      \
         [](const ExperimentConfig& c) { return std::to_string(c.field); }}}
#define ERGNN_REAL_KEY(key, field)                                                      \
  {key, {[](ExperimentConfig& c, const std::string& v) { c.field = to_double(v); },   \
         [](const ExperimentConfig& c) { return fmt_double(c.field); }}}
#define ERGNN_STRING_KEY(key, field)                                                    \
  {key, {[](ExperimentConfig& c, const std::string& v) { c.field = v; },              \
         [](const ExperimentConfig& c) { return c.field; }}}

// Ordered: this is also the order of the canonical text form.
const std::vector<std::pair<std::string, KeyHandler>>& handlers() {
  static const std::vector<std::pair<std::string, KeyHandler>> table = {
      {"task", {[](ExperimentConfig& c, const std::string& v) { c.task = parse_task(v); },
                [](const ExperimentConfig& c) { return to_string(c.task); }}},
      ERGNN_STRING_KEY("graph", graph),
      ERGNN_SIZE_KEY("grid_rows", grid_rows),
      ERGNN_SIZE_KEY("grid_cols", grid_cols),
      {"sbm_blocks",
       {[](ExperimentConfig& c, const std::string& v) {
          c.sbm_blocks.clear();
          for (const auto& item : split_list(v)) c.sbm_blocks.push_back(to_u64(item));
        },
        [](const ExperimentConfig& c) { return join(c.sbm_blocks); }}},
      ERGNN_REAL_KEY("sbm_p_in", sbm_p_in),
      ERGNN_REAL_KEY("sbm_p_out", sbm_p_out),
      ERGNN_REAL_KEY("feature_noise", feature_noise),
      ERGNN_SIZE_KEY("data_seed", data_seed),
      ERGNN_STRING_KEY("edges", edges_path),
      ERGNN_STRING_KEY("features", features_path),
      ERGNN_STRING_KEY("labels", labels_path),
      ERGNN_SIZE_KEY("K1", k_num),
      ERGNN_SIZE_KEY("K2", k_den),
      ERGNN_SIZE_KEY("mlp_layers", mlp_layers),
      ERGNN_SIZE_KEY("mlp_hidden", mlp_hidden),
      {"variant", {[](ExperimentConfig& c, const std::string& v) { c.variant = parse_model_variant(v); },
                   [](const ExperimentConfig& c) { return to_string(c.variant); }}},
      ERGNN_REAL_KEY("lr", lr),
      ERGNN_REAL_KEY("weight_decay", weight_decay),
      ERGNN_REAL_KEY("filter_lr", filter_lr),
      ERGNN_REAL_KEY("filter_weight_decay", filter_weight_decay),
      ERGNN_REAL_KEY("dropout", dropout),
      ERGNN_REAL_KEY("eta", eta),
      ERGNN_REAL_KEY("xi", xi),
      {"detach_reg_target", {[](ExperimentConfig& c, const std::string& v) { c.detach_reg_target = to_bool(v); },
                             [](const ExperimentConfig& c) { return std::string(c.detach_reg_target ? "true" : "false"); }}},
      ERGNN_SIZE_KEY("max_epochs", max_epochs),
      ERGNN_SIZE_KEY("patience", patience),
      {"seeds",
       {[](ExperimentConfig& c, const std::string& v) {
          c.seeds.clear();
          for (const auto& item : split_list(v)) c.seeds.push_back(to_u64(item));
        },
        [](const ExperimentConfig& c) { return join(c.seeds); }}},
      {"target_filter",
       {[](ExperimentConfig& c, const std::string& v) {
          if (v == "none") c.target_filter.reset();
          else c.target_filter = parse_filter_kind(v);
        },
        [](const ExperimentConfig& c) {
          return c.target_filter ? std::string(to_string(*c.target_filter)) : std::string("none");
        }}},
      {"split",
       {[](ExperimentConfig& c, const std::string& v) {
          const auto parts = split_list(v);
          if (parts.size() != 3) throw std::invalid_argument("split needs three ratios train,val,test");
          for (std::size_t i = 0; i < 3; ++i) c.split[i] = to_double(parts[i]);
        },
        [](const ExperimentConfig& c) {
          return fmt_double(c.split[0]) + "," + fmt_double(c.split[1]) + "," + fmt_double(c.split[2]);
        }}},
      ERGNN_SIZE_KEY("theorem_grid_points", theorem_grid_points),
      ERGNN_REAL_KEY("theorem_clamp", theorem_clamp),
      ERGNN_SIZE_KEY("dense_limit", dense_limit),
  };
  return table;
}

#undef ERGNN_SIZE_KEY
#undef ERGNN_REAL_KEY
#undef ERGNN_STRING_KEY

const KeyHandler* find_handler(const std::string& key) {
  for (const auto& [name, h] : handlers())
    if (name == key) return &h;
  return nullptr;
}

}  // namespace

std::string to_string(Task task) {
  switch (task) {
    case Task::FilterLearning: return "filter-learning";
    case Task::NodeClassification: return "node-classification";
    case Task::TheoremCheck: return "theorem-check";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::FilterLearning, Task::NodeClassification, Task::TheoremCheck})
    if (to_string(t) == name) return t;
  throw std::invalid_argument("unknown task '" + name + "'");
}

ExperimentConfig ExperimentConfig::defaults_for(Task task) {
  ExperimentConfig c;
  c.task = task;
  switch (task) {
    case Task::FilterLearning:
      c.graph = "grid";
      c.filter_lr = 0.05;
      break;
    case Task::NodeClassification:
      c.graph = "sbm";
      c.weight_decay = 5e-4;
      c.dropout = 0.5;
      break;
    case Task::TheoremCheck:
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (graph != "grid" && graph != "sbm" && graph != "files") fail("graph must be grid, sbm or files");
  if (grid_rows == 0 || grid_cols == 0) fail("grid dimensions must be positive");
  if (sbm_blocks.empty()) fail("sbm_blocks must list at least one block");
  if (!(sbm_p_in >= 0.0 && sbm_p_in <= 1.0) || !(sbm_p_out >= 0.0 && sbm_p_out <= 1.0))
    fail("sbm probabilities must lie in [0, 1]");
  if (feature_noise < 0.0) fail("feature_noise must be non-negative");
  if (mlp_layers == 0) fail("mlp_layers must be at least 1");
  if (mlp_hidden == 0) fail("mlp_hidden must be positive");
  if (lr < 0.0 || filter_lr < 0.0) fail("learning rates must be non-negative");
  if (weight_decay < 0.0 || filter_weight_decay < 0.0) fail("weight decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (eta < 0.0 || xi < 0.0) fail("eta and xi must be non-negative");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (patience > max_epochs) fail("patience must not exceed max_epochs");
  if (seeds.empty()) fail("seeds must list at least one seed");
  double total = 0.0;
  for (double r : split) {
    if (r < 0.0) fail("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("split ratios must sum to 1");
  if (theorem_grid_points < 2) fail("theorem_grid_points must be at least 2");
  if (!(theorem_clamp > 0.0)) fail("theorem_clamp must be positive");
}

ExperimentConfig parse_config_text(const std::string& text, Task default_task, const std::string& source_name) {
  struct Entry {
    std::size_t line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto error = [&](std::size_t at, const std::string& what) {
    throw ConfigError(source_name + ":" + std::to_string(at) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) error(line_no, "expected 'key = value'");
    Entry e{line_no, trim(t.substr(0, eq)), trim(t.substr(eq + 1))};
    if (!find_handler(e.key)) error(line_no, "unknown key '" + e.key + "'");
    if (!seen.insert(e.key).second) error(line_no, "duplicate key '" + e.key + "'");
    entries.push_back(std::move(e));
  }

  Task task = default_task;
  for (const auto& e : entries) {
    if (e.key != "task") continue;
    try {
      task = parse_task(e.value);
    } catch (const std::exception& ex) {
      error(e.line, ex.what());
    }
  }
  ExperimentConfig cfg = ExperimentConfig::defaults_for(task);
  for (const auto& e : entries) {
    try {
      find_handler(e.key)->set(cfg, e.value);
    } catch (const std::exception& ex) {
      error(e.line, "key '" + e.key + "': " + ex.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path, Task default_task) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), default_task, path.string());
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, h] : handlers()) out += key + " = " + h.get(config) + "\n";
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& entry : handlers()) k.push_back(entry.first);
    return k;
  }();
  return keys;
}

}  // namespace ergnn
