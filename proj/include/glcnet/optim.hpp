#pragma once

#include <cstdint>
#include <vector>

#include "glcnet/layers.hpp"

namespace glcnet {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Adam with the bias-corrected update used by common deep-learning libraries.
template <typename T>
class Adam {
 public:
  Adam(ParamRefs<T> params, AdamConfig cfg = {});

  void step(double lr);
  void zero_grad();
  int64_t steps() const { return t_; }
  const ParamRefs<T>& params() const { return params_; }

 private:
  ParamRefs<T> params_;
  AdamConfig cfg_;
  std::vector<std::vector<T>> m_, v_;
  int64_t t_ = 0;
};

// lr at epoch e of E: base * (1 + cos(pi * e / E)) / 2.
double cosine_lr(double base, int epoch, int total_epochs);
// lr at epoch e: base * decay^e.
double exponential_lr(double base, double decay, int epoch);

}  // namespace glcnet
