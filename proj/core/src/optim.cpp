#include <cmath>

#include "ttk/error.hpp"
#include "ttk/train.hpp"

namespace ttk {

void Adam::step(std::span<const ParamRef> params) {
  if (m_.empty()) {
    for (const ParamRef& p : params) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }
  if (m_.size() != params.size()) throw StateError("Adam: parameter list changed between steps");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (Index i = 0; i < params.size(); ++i) {
    DenseTensor& w = *params[i].value;
    const DenseTensor& g = *params[i].grad;
    if (w.shape() != m_[i].shape() || g.shape() != w.shape()) {
      throw ShapeError("Adam: gradient for " + params[i].name + " is not shaped like its parameter");
    }
    for (Index n = 0; n < w.size(); ++n) {
      m_[i][n] = config_.beta1 * m_[i][n] + (1.0 - config_.beta1) * g[n];
      v_[i][n] = config_.beta2 * v_[i][n] + (1.0 - config_.beta2) * g[n] * g[n];
      const double mhat = m_[i][n] / c1;
      const double vhat = v_[i][n] / c2;
      w[n] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace ttk
