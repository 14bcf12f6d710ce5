#include "ergnn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ergnn {

namespace {

constexpr const char* kMagic = "ergnn-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size())
    throw std::runtime_error("checkpoint: bad number '" + token + "'");
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw std::runtime_error("checkpoint: expected '" + word + "', got '" + got + "'");
}

}  // namespace

void save_checkpoint(std::ostream& out, const RationalFilterParams& params) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "variant " << to_string(params.variant) << '\n';
  out << "dropout " << hex(params.dropout_p) << '\n';
  out << "mlp_layers " << params.mlp.size() << '\n';
  for (const auto& [name, m] : params.tensors()) {
    out << "tensor " << name << ' ' << m->rows() << ' ' << m->cols() << '\n';
    for (std::size_t r = 0; r < m->rows(); ++r) {
      for (std::size_t c = 0; c < m->cols(); ++c) out << (c ? " " : "") << hex((*m)(r, c));
      out << '\n';
    }
  }
  out << "end\n";
}

RationalFilterParams load_checkpoint(std::istream& in) {
  expect(in, kMagic);
  int version = 0;
  if (!(in >> version) || version != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  RationalFilterParams p;
  std::string token;
  expect(in, "variant");
  in >> token;
  p.variant = parse_model_variant(token);
  expect(in, "dropout");
  in >> token;
  p.dropout_p = unhex(token);
  expect(in, "mlp_layers");
  std::size_t layers = 0;
  if (!(in >> layers)) throw std::runtime_error("checkpoint: bad layer count");
  p.mlp.resize(layers);
  for (const auto& [name, m] : p.tensors()) {
    expect(in, "tensor");
    expect(in, name);
    std::size_t rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw std::runtime_error("checkpoint: bad shape for " + name);
    *m = Matrix(rows, cols);
    for (double& v : m->data()) {
      if (!(in >> token)) throw std::runtime_error("checkpoint: truncated tensor " + name);
      v = unhex(token);
    }
  }
  expect(in, "end");
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const RationalFilterParams& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot write checkpoint");
  save_checkpoint(out, params);
}

RationalFilterParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open checkpoint");
  return load_checkpoint(in);
}

}  // namespace ergnn
