#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ergnn/adam.hpp"
#include "ergnn/autodiff.hpp"
#include "ergnn/chebyshev.hpp"
#include "ergnn/graph.hpp"
#include "ergnn/matrix.hpp"

namespace ergnn {

enum class TaskMode { Classification, Regression };

/// Ergnn is the full rational model. The ablations are the same model with
/// parts removed:
///   NumeratorOnly: MLP replaced by identity, xi = 0 and no L_r term, i.e. a
///                  plain polynomial spectral filter.
///   PlainMlp:      numerator replaced by identity and no L_r term, so the
///                  graph is never used.
enum class ModelVariant { Ergnn, NumeratorOnly, PlainMlp };

std::string to_string(ModelVariant v);
ModelVariant parse_model_variant(const std::string& name);

struct ModelConfig {
  std::size_t in_features = 0;
  /// Class count (classification) or signal width (regression). The input
  /// transform maps straight to this width so z1 is already a prediction.
  std::size_t out_width = 0;
  std::size_t k_num = 10;
  std::size_t k_den = 10;
  std::size_t mlp_layers = 2;
  std::size_t mlp_hidden = 64;
  double dropout = 0.0;
  ModelVariant variant = ModelVariant::Ergnn;
};

struct DenseLayer {
  Matrix w;
  Matrix b;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// All learnable state. gamma_num / gamma_den are 1 x (K+1) rows of filter
/// values at the Chebyshev nodes.
struct RationalFilterParams {
  Matrix w;
  Matrix b;
  Matrix gamma_num;
  Matrix gamma_den;
  std::vector<DenseLayer> mlp;
  double dropout_p = 0.0;
  ModelVariant variant = ModelVariant::Ergnn;

  NodeValueCoeffs numerator() const;
  NodeValueCoeffs denominator() const;
  std::vector<double> alpha() const;
  std::vector<double> beta() const;

  /// Every tensor, in a fixed order, with stable names (checkpoint keys).
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;
  /// The subset that receives gradients under `variant`.
  std::vector<std::pair<std::string, Matrix*>> trainable();
  std::vector<std::pair<std::string, const Matrix*>> trainable() const;

  friend bool operator==(const RationalFilterParams&, const RationalFilterParams&) = default;
};

struct LossWeights {
  double eta = 1.0;
  double xi = 1.0;
};

/// Glorot-uniform dense weights, zero biases, both filters at the constant 1
/// interpolant (numerator = identity, denominator = 1).
RationalFilterParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardOutputs {
  Matrix z0;
  Matrix z1;
  Matrix z2;
};

/// z0 = x W + b, z1 = sum_k alpha_k T_k(lhat) z0, z2 = MLP(z1).
ForwardOutputs forward(const RationalFilterParams& params, const Matrix& x, const SparseSymMatrix& lhat,
                       bool training = false, std::uint64_t seed = 0);

/// sum_k beta_k T_k(lhat) z2 with beta interpolated from `gamma_den`.
Matrix denominator_apply(const SparseSymMatrix& lhat, const NodeValueCoeffs& gamma_den, const Matrix& z2);

/// Hard labels (classification) or real target signals (regression).
using Targets = std::variant<std::vector<int>, Matrix>;

struct LossSpec {
  TaskMode mode = TaskMode::Classification;
  LossWeights weights;
  /// Stop the gradient through the second argument of L_r.
  bool detach_reg_target = false;
};

struct LossBreakdown {
  double total = 0.0;
  double nume = 0.0;
  double deno = 0.0;
  double reg = 0.0;
};

/// Loss on already-computed outputs (no gradients).
LossBreakdown loss(const ForwardOutputs& outputs, const Targets& y, const ad::NodeSet& mask,
                   const SparseSymMatrix& lhat, const RationalFilterParams& params, const LossSpec& spec);

// Tape-level building blocks, shared by training and gradient checks.
namespace graph_ops {

struct ParamVars {
  ad::Var w, b, gamma_num, gamma_den;
  std::vector<std::pair<ad::Var, ad::Var>> mlp;
};

struct ForwardVars {
  ad::Var z0, z1, z2;
};

struct LossVars {
  ad::Var total, nume, deno, reg;
};

ParamVars bind(ad::Tape& tape, const RationalFilterParams& params, bool requires_grad);
ForwardVars forward(const RationalFilterParams& params, const ParamVars& pv, ad::Var x,
                    const SparseSymMatrix& lhat, bool training, std::uint64_t seed);
ad::Var denominator(const SparseSymMatrix& lhat, ad::Var gamma_den, ad::Var z2);
LossVars loss(const RationalFilterParams& params, const ParamVars& pv, const ForwardVars& fv,
              const Targets& y, const ad::NodeSet& mask, const SparseSymMatrix& lhat, const LossSpec& spec);
/// Gradients of `pv` aligned with params.trainable().
std::vector<Matrix> trainable_grads(const RationalFilterParams& params, const ParamVars& pv);

}  // namespace graph_ops

struct LossEvaluation {
  LossBreakdown loss;
  ForwardOutputs outputs;
  std::vector<Matrix> grads;  // aligned with params.trainable(); empty unless requested
};

/// One forward (+ optional backward) pass of the full objective.
LossEvaluation evaluate_loss(const RationalFilterParams& params, const Matrix& x, const SparseSymMatrix& lhat,
                             const Targets& y, const ad::NodeSet& mask, const LossSpec& spec, bool training,
                             std::uint64_t seed, bool want_grads);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  AdamHyper dense;   // W, b, MLP
  AdamHyper filter;  // gamma_num, gamma_den
  LossSpec loss;
};

struct StepResult {
  LossBreakdown loss;
  double denominator_l1 = 0.0;
  bool denominator_degenerate = false;
};

/// Owns the optimizer state for one parameter set. Single-owner: not safe
/// for concurrent steps.
class Trainer {
 public:
  static constexpr double kDegenerateDenominator = 1e-6;

  Trainer(RationalFilterParams& params, TrainOptions options);

  /// One forward, one backward through every loss term, one Adam update.
  /// Throws TrainingDiverged when the loss is not finite.
  StepResult step(const Matrix& x, const SparseSymMatrix& lhat, const Targets& y, const ad::NodeSet& mask,
                  std::uint64_t dropout_seed);

  const Adam& optimizer() const noexcept { return adam_; }
  std::size_t degenerate_steps() const noexcept { return degenerate_steps_; }
  void set_warning_sink(std::function<void(const std::string&)> sink) { warn_ = std::move(sink); }

 private:
  RationalFilterParams* params_;
  TrainOptions options_;
  Adam adam_;
  std::size_t degenerate_steps_ = 0;
  std::function<void(const std::string&)> warn_;
};

}  // namespace ergnn
