#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ergnn/graph.hpp"

namespace ergnn {

namespace {

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& what) {
  throw std::runtime_error(source + ":" + std::to_string(line) + ": " + what);
}

bool parse_index(const std::string& token, NodeId& out) {
  if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) return false;
  try {
    out = std::stoull(token);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

Graph read_edge_list(std::istream& in, std::optional<std::size_t> num_nodes, const std::string& source_name) {
  EdgeList edges;
  std::size_t max_index = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> declared;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      // write_edge_list records the node count as "# <n> nodes" so isolated
      // trailing nodes survive a round trip.
      std::istringstream cs(line.substr(hash + 1));
      std::size_t count = 0;
      std::string word, rest;
      if (line_no == 1 && hash == 0 && cs >> count >> word && word == "nodes" && !(cs >> rest)) declared = count;
      line.erase(hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string a, b, extra;
    ls >> a >> b;
    if (b.empty()) parse_error(source_name, line_no, "expected two node indices");
    if (ls >> extra) parse_error(source_name, line_no, "unexpected token '" + extra + "'");
    NodeId u = 0, v = 0;
    if (!parse_index(a, u) || !parse_index(b, v))
      parse_error(source_name, line_no, "node indices must be non-negative integers");
    if (num_nodes && (u >= *num_nodes || v >= *num_nodes))
      parse_error(source_name, line_no, "node index out of range for " + std::to_string(*num_nodes) + " nodes");
    max_index = std::max({max_index, u, v});
    any = true;
    edges.emplace_back(u, v);
  }
  if (in.bad()) throw std::runtime_error(source_name + ": read failure");
  if (!num_nodes && declared && any && max_index >= *declared)
    throw std::runtime_error(source_name + ": node index " + std::to_string(max_index) + " exceeds the declared " +
                             std::to_string(*declared) + " nodes");
  if (!num_nodes) num_nodes = declared;
  const std::size_t n = num_nodes ? *num_nodes : (any ? max_index + 1 : 0);
  return build_graph(edges, n);
}

Graph read_edge_list(const std::filesystem::path& path, std::optional<std::size_t> num_nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open edge list");
  return read_edge_list(in, num_nodes, path.string());
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# " << g.num_nodes() << " nodes\n";
  for (const auto& [u, v] : g.undirected_edges()) out << u << ' ' << v << '\n';
}

}  // namespace ergnn
