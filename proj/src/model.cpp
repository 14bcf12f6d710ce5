#include "ergnn/model.hpp"

#include <cmath>
#include <iostream>

#include "ergnn/rng.hpp"

namespace ergnn {

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.data()) v = rng.uniform(-a, a);
  return m;
}

NodeValueCoeffs row_to_coeffs(const Matrix& row) {
  auto d = row.data();
  return NodeValueCoeffs{{d.begin(), d.end()}};
}

bool uses_numerator(ModelVariant v) { return v != ModelVariant::PlainMlp; }
bool uses_mlp(ModelVariant v) { return v != ModelVariant::NumeratorOnly; }
bool uses_denominator(ModelVariant v) { return v == ModelVariant::Ergnn; }

const Matrix& signals_of(const Targets& y) {
  if (const auto* m = std::get_if<Matrix>(&y)) return *m;
  throw std::invalid_argument("regression loss needs real-valued target signals");
}

const std::vector<int>& labels_of(const Targets& y) {
  if (const auto* l = std::get_if<std::vector<int>>(&y)) return *l;
  throw std::invalid_argument("classification loss needs integer labels");
}

}  // namespace

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Ergnn: return "ergnn";
    case ModelVariant::NumeratorOnly: return "numerator-only";
    case ModelVariant::PlainMlp: return "plain-mlp";
  }
  return "?";
}

ModelVariant parse_model_variant(const std::string& name) {
  for (ModelVariant v : {ModelVariant::Ergnn, ModelVariant::NumeratorOnly, ModelVariant::PlainMlp})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

NodeValueCoeffs RationalFilterParams::numerator() const { return row_to_coeffs(gamma_num); }
NodeValueCoeffs RationalFilterParams::denominator() const { return row_to_coeffs(gamma_den); }
std::vector<double> RationalFilterParams::alpha() const { return interp_to_coeffs(gamma_num.data()); }
std::vector<double> RationalFilterParams::beta() const { return interp_to_coeffs(gamma_den.data()); }

std::vector<std::pair<std::string, Matrix*>> RationalFilterParams::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out{
      {"w", &w}, {"b", &b}, {"gamma_num", &gamma_num}, {"gamma_den", &gamma_den}};
  for (std::size_t i = 0; i < mlp.size(); ++i) {
    out.emplace_back("mlp." + std::to_string(i) + ".w", &mlp[i].w);
    out.emplace_back("mlp." + std::to_string(i) + ".b", &mlp[i].b);
  }
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> RationalFilterParams::tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<RationalFilterParams*>(this)->tensors()) out.emplace_back(name, m);
  return out;
}

std::vector<std::pair<std::string, Matrix*>> RationalFilterParams::trainable() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (auto& entry : tensors()) {
    const std::string& name = entry.first;
    if (name == "gamma_num" && !uses_numerator(variant)) continue;
    if (name == "gamma_den" && !uses_denominator(variant)) continue;
    out.push_back(entry);
  }
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> RationalFilterParams::trainable() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, m] : const_cast<RationalFilterParams*>(this)->trainable()) out.emplace_back(name, m);
  return out;
}

RationalFilterParams init_params(const ModelConfig& config, std::uint64_t seed) {
  if (config.in_features == 0 || config.out_width == 0)
    throw std::invalid_argument("init_params: input and output widths must be positive");
  if (uses_mlp(config.variant) && config.mlp_layers == 0)
    throw std::invalid_argument("init_params: the MLP needs at least one layer");
  if (uses_mlp(config.variant) && config.mlp_layers > 1 && config.mlp_hidden == 0)
    throw std::invalid_argument("init_params: hidden width must be positive");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0))
    throw std::invalid_argument("init_params: dropout must lie in [0, 1)");

  Rng rng(seed);
  RationalFilterParams p;
  p.variant = config.variant;
  p.dropout_p = config.dropout;
  p.w = glorot(config.in_features, config.out_width, rng);
  p.b = Matrix(1, config.out_width);
  p.gamma_num = Matrix(1, config.k_num + 1, 1.0);
  p.gamma_den = Matrix(1, config.k_den + 1, 1.0);
  if (uses_mlp(config.variant)) {
    std::size_t width = config.out_width;
    for (std::size_t l = 0; l < config.mlp_layers; ++l) {
      const std::size_t next = l + 1 == config.mlp_layers ? config.out_width : config.mlp_hidden;
      p.mlp.push_back(DenseLayer{glorot(width, next, rng), Matrix(1, next)});
      width = next;
    }
  }
  return p;
}

namespace graph_ops {

ParamVars bind(ad::Tape& tape, const RationalFilterParams& params, bool requires_grad) {
  ParamVars pv;
  pv.w = tape.leaf(params.w, requires_grad);
  pv.b = tape.leaf(params.b, requires_grad);
  pv.gamma_num = tape.leaf(params.gamma_num, requires_grad && uses_numerator(params.variant));
  pv.gamma_den = tape.leaf(params.gamma_den, requires_grad && uses_denominator(params.variant));
  for (const auto& layer : params.mlp) pv.mlp.emplace_back(tape.leaf(layer.w, requires_grad), tape.leaf(layer.b, requires_grad));
  return pv;
}

ad::Var denominator(const SparseSymMatrix& lhat, ad::Var gamma_den, ad::Var z2) {
  ad::Var beta = ad::interp_coeffs(gamma_den);
  return ad::cheb_filter(lhat, z2, beta);
}

ForwardVars forward(const RationalFilterParams& params, const ParamVars& pv, ad::Var x,
                    const SparseSymMatrix& lhat, bool training, std::uint64_t seed) {
  if (x.rows() != lhat.num_nodes()) {
    throw std::invalid_argument("forward: signal has " + std::to_string(x.rows()) + " rows, graph has " +
                                std::to_string(lhat.num_nodes()) + " nodes");
  }
  ForwardVars fv;
  ad::Var xin = ad::dropout(x, params.dropout_p, derive_seed(seed, 0), training);
  fv.z0 = ad::linear(xin, pv.w, pv.b);

  if (uses_numerator(params.variant)) {
    ad::Var alpha = ad::interp_coeffs(pv.gamma_num);
    fv.z1 = ad::cheb_filter(lhat, fv.z0, alpha);
  } else {
    fv.z1 = fv.z0;
  }

  if (uses_mlp(params.variant)) {
    ad::Var h = fv.z1;
    for (std::size_t l = 0; l < pv.mlp.size(); ++l) {
      if (l > 0) {
        h = ad::relu(h);
        h = ad::dropout(h, params.dropout_p, derive_seed(seed, l), training);
      }
      h = ad::linear(h, pv.mlp[l].first, pv.mlp[l].second);
    }
    fv.z2 = h;
  } else {
    fv.z2 = fv.z1;
  }
  return fv;
}

LossVars loss(const RationalFilterParams& params, const ParamVars& pv, const ForwardVars& fv, const Targets& y,
              const ad::NodeSet& mask, const SparseSymMatrix& lhat, const LossSpec& spec) {
  ad::Tape& tape = fv.z1.tape();
  const bool regression = spec.mode == TaskMode::Regression;
  auto supervised = [&](ad::Var pred) {
    if (regression) return ad::mse(pred, tape.constant(signals_of(y)), mask);
    return ad::cross_entropy(pred, labels_of(y), mask);
  };
  if (regression) {
    if (!signals_of(y).same_shape(fv.z1.value()))
      throw std::invalid_argument("loss: target signals must match the prediction shape");
  } else if (labels_of(y).size() != fv.z1.rows()) {
    throw std::invalid_argument("loss: one label per node required");
  }

  LossVars lv;
  lv.nume = supervised(fv.z1);
  lv.total = ad::scale(lv.nume, spec.weights.eta);

  if (params.variant != ModelVariant::NumeratorOnly) {
    lv.deno = supervised(fv.z2);
    lv.total = ad::add(lv.total, ad::scale(lv.deno, spec.weights.xi));
  } else {
    lv.deno = tape.constant(Matrix(1, 1));
  }

  if (uses_denominator(params.variant)) {
    ad::Var filtered = denominator(lhat, pv.gamma_den, fv.z2);
    ad::Var target = regression ? filtered : ad::softmax_rows(filtered);
    if (spec.detach_reg_target) target = ad::detach(target);
    const ad::NodeSet everyone = ad::all_nodes(fv.z1.rows());
    lv.reg = regression ? ad::mse(fv.z1, target, everyone) : ad::cross_entropy(fv.z1, target, everyone);
    lv.total = ad::add(lv.total, lv.reg);
  } else {
    lv.reg = tape.constant(Matrix(1, 1));
  }
  return lv;
}

std::vector<Matrix> trainable_grads(const RationalFilterParams& params, const ParamVars& pv) {
  std::vector<Matrix> grads;
  for (const auto& [name, m] : params.trainable()) {
    (void)m;
    if (name == "w") grads.push_back(pv.w.grad());
    else if (name == "b") grads.push_back(pv.b.grad());
    else if (name == "gamma_num") grads.push_back(pv.gamma_num.grad());
    else if (name == "gamma_den") grads.push_back(pv.gamma_den.grad());
    else {
      // mlp.<i>.w / mlp.<i>.b
      const std::size_t i = std::stoul(name.substr(4, name.find('.', 4) - 4));
      grads.push_back(name.back() == 'w' ? pv.mlp[i].first.grad() : pv.mlp[i].second.grad());
    }
  }
  return grads;
}

}  // namespace graph_ops

ForwardOutputs forward(const RationalFilterParams& params, const Matrix& x, const SparseSymMatrix& lhat,
                       bool training, std::uint64_t seed) {
  ad::Tape tape;
  const auto pv = graph_ops::bind(tape, params, false);
  const auto fv = graph_ops::forward(params, pv, tape.constant(x), lhat, training, seed);
  return {fv.z0.value(), fv.z1.value(), fv.z2.value()};
}

Matrix denominator_apply(const SparseSymMatrix& lhat, const NodeValueCoeffs& gamma_den, const Matrix& z2) {
  const auto beta = interp_to_coeffs(gamma_den);
  return combine(cheb_apply(lhat, z2, gamma_den.order()), beta);
}

LossBreakdown loss(const ForwardOutputs& outputs, const Targets& y, const ad::NodeSet& mask,
                   const SparseSymMatrix& lhat, const RationalFilterParams& params, const LossSpec& spec) {
  ad::Tape tape;
  const auto pv = graph_ops::bind(tape, params, false);
  graph_ops::ForwardVars fv{tape.constant(outputs.z0), tape.constant(outputs.z1), tape.constant(outputs.z2)};
  const auto lv = graph_ops::loss(params, pv, fv, y, mask, lhat, spec);
  return {lv.total.item(), lv.nume.item(), lv.deno.item(), lv.reg.item()};
}

LossEvaluation evaluate_loss(const RationalFilterParams& params, const Matrix& x, const SparseSymMatrix& lhat,
                             const Targets& y, const ad::NodeSet& mask, const LossSpec& spec, bool training,
                             std::uint64_t seed, bool want_grads) {
  ad::Tape tape;
  const auto pv = graph_ops::bind(tape, params, want_grads);
  const auto fv = graph_ops::forward(params, pv, tape.constant(x), lhat, training, seed);
  const auto lv = graph_ops::loss(params, pv, fv, y, mask, lhat, spec);
  LossEvaluation out;
  out.loss = {lv.total.item(), lv.nume.item(), lv.deno.item(), lv.reg.item()};
  out.outputs = {fv.z0.value(), fv.z1.value(), fv.z2.value()};
  if (want_grads) {
    tape.backward(lv.total);
    out.grads = graph_ops::trainable_grads(params, pv);
  }
  return out;
}

Trainer::Trainer(RationalFilterParams& params, TrainOptions options)
    : params_(&params), options_(options), warn_([](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }) {
  for (const auto& [name, m] : params.trainable()) {
    const bool filter = name == "gamma_num" || name == "gamma_den";
    adam_.add_param(m->rows(), m->cols(), filter ? options_.filter : options_.dense);
  }
}

StepResult Trainer::step(const Matrix& x, const SparseSymMatrix& lhat, const Targets& y, const ad::NodeSet& mask,
                         std::uint64_t dropout_seed) {
  LossEvaluation eval;
  try {
    eval = evaluate_loss(*params_, x, lhat, y, mask, options_.loss, true, dropout_seed, true);
  } catch (const ad::NonFiniteValue& e) {
    throw TrainingDiverged("after " + std::to_string(adam_.steps()) + " steps: " + e.what());
  }
  if (!std::isfinite(eval.loss.total)) {
    throw TrainingDiverged("non-finite loss after " + std::to_string(adam_.steps()) + " steps (nume=" +
                           std::to_string(eval.loss.nume) + ", deno=" + std::to_string(eval.loss.deno) +
                           ", reg=" + std::to_string(eval.loss.reg) + ")");
  }
  std::vector<Matrix*> targets;
  std::vector<const Matrix*> grads;
  for (auto& entry : params_->trainable()) targets.push_back(entry.second);
  for (const Matrix& g : eval.grads) grads.push_back(&g);
  adam_.step(targets, grads);

  StepResult result;
  result.loss = eval.loss;
  if (params_->variant == ModelVariant::Ergnn) {
    for (double v : params_->beta()) result.denominator_l1 += std::abs(v);
    result.denominator_degenerate = result.denominator_l1 < kDegenerateDenominator;
    if (result.denominator_degenerate && degenerate_steps_++ == 0) {
      const std::string message("denominator coefficients collapsed (|beta|_1 = " + std::to_string(result.denominator_l1) +
            "); the rational filter is ill-defined");
      if (warn_) {
        warn_(message);
      } else {
        std::cerr << "warning: " << message << '\n';
      }
    }
  }
  return result;
}

}  // namespace ergnn
