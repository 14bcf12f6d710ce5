#include "ergnn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ergnn {

void Adam::add_param(std::size_t rows, std::size_t cols, AdamHyper hyper) {
  slots_.push_back(Slot{Matrix(rows, cols), Matrix(rows, cols), hyper});
}

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix* const> grads) {
  if (params.size() != slots_.size() || grads.size() != slots_.size())
    throw std::invalid_argument("Adam::step: parameter count differs from registered slots");
  ++t_;
  const double t = static_cast<double>(t_);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    Slot& s = slots_[i];
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    if (!p.same_shape(s.m) || !g.same_shape(s.m)) throw std::invalid_argument("Adam::step: shape mismatch");
    const AdamHyper& h = s.hyper;
    const double bc1 = 1.0 - std::pow(h.beta1, t);
    const double bc2 = 1.0 - std::pow(h.beta2, t);
    const double decay = 1.0 - h.lr * h.weight_decay;
    auto pd = p.data();
    auto gd = g.data();
    auto md = s.m.data();
    auto vd = s.v.data();
    for (std::size_t j = 0; j < pd.size(); ++j) {
      md[j] = h.beta1 * md[j] + (1.0 - h.beta1) * gd[j];
      vd[j] = h.beta2 * vd[j] + (1.0 - h.beta2) * gd[j] * gd[j];
      const double mhat = md[j] / bc1;
      const double vhat = vd[j] / bc2;
      pd[j] = decay * pd[j] - h.lr * mhat / (std::sqrt(vhat) + h.epsilon);
    }
  }
}

}  // namespace ergnn
