#include "lightk/optim.hpp"

#include <cmath>

#include "lightk/errors.hpp"

namespace lightk {

void Adam::step(std::span<Parameter* const> params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ShapeError("Adam: parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (p.value.rows() != m_[i].rows() || p.value.cols() != m_[i].cols()) {
      throw ShapeError("Adam: state shape mismatch for " + p.name);
    }
    if (p.grad.size() == 0) p.zero_grad();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

}  // namespace lightk
