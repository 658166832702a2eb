#include "glcnet/optim.hpp"

#include <cmath>
#include <numbers>

#include "glcnet/error.hpp"

namespace glcnet {

template <typename T>
Adam<T>::Adam(ParamRefs<T> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.beta1 < 0 || cfg_.beta1 >= 1 || cfg_.beta2 < 0 || cfg_.beta2 >= 1 || cfg_.eps <= 0) {
    throw InvalidArgument("invalid Adam hyperparameters");
  }
  for (auto* p : params_) {
    if (!p->trainable) throw InvalidArgument("parameter '" + p->name + "' is not trainable");
    m_.emplace_back(p->value.size(), T(0));
    v_.emplace_back(p->value.size(), T(0));
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  ++t_;
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const T step_size = static_cast<T>(lr / bc1);
  const T sqrt_bc2 = static_cast<T>(std::sqrt(bc2));
  const T eps = static_cast<T>(cfg_.eps), wd = static_cast<T>(cfg_.weight_decay);
  for (size_t k = 0; k < params_.size(); ++k) {
    T* w = params_[k]->value.data();
    const T* g = params_[k]->grad.data();
    T* m = m_[k].data();
    T* v = v_[k].data();
    const size_t n = m_[k].size();
    for (size_t i = 0; i < n; ++i) {
      const T gi = wd != T(0) ? g[i] + wd * w[i] : g[i];
      m[i] = b1 * m[i] + (T(1) - b1) * gi;
      v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
      w[i] -= step_size * m[i] / (std::sqrt(v[i]) / sqrt_bc2 + eps);
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto* p : params_) p->grad.zero();
}

double cosine_lr(double base, int epoch, int total_epochs) {
  if (total_epochs <= 0) throw InvalidArgument("cosine schedule needs a positive epoch count");
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / total_epochs));
}

double exponential_lr(double base, double decay, int epoch) { return base * std::pow(decay, epoch); }

template class Adam<float>;
template class Adam<double>;

}  // namespace glcnet
