#pragma once

#include <string>
#include <vector>

#include "glcnet/rng.hpp"
#include "glcnet/tensor.hpp"

namespace glcnet {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;  // false for buffers such as running statistics

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape, bool train = true)
      : name(std::move(n)), value(shape), grad(train ? shape : std::vector<int>{0}), trainable(train) {}
};

template <typename T>
using ParamRefs = std::vector<Parameter<T>*>;

// 2-D convolution over NCHW batches (im2col + GEMM).
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride = 1,
         int padding = 0, int dilation = 1, bool bias = true);

  Tensor<T> forward(const Tensor<T>& x, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy);
  void parameters(ParamRefs<T>& out);
  void init_he(Rng& rng);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0, dil_ = 1;
  bool has_bias_ = true;
  std::vector<int> in_shape_;
  int out_h_ = 0, out_w_ = 0;
  std::vector<T> col_;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels, double eps = 1e-5, double momentum = 0.1);

  // training: normalize with batch statistics and update running statistics.
  Tensor<T> forward(const Tensor<T>& x, bool training, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy);
  void parameters(ParamRefs<T>& out);
  void init();

  Parameter<T> gamma;
  Parameter<T> beta;
  Parameter<T> running_mean;
  Parameter<T> running_var;

 private:
  int channels_ = 0;
  double eps_ = 1e-5, momentum_ = 0.1;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
  bool batch_stats_ = true;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy) const;

 private:
  std::vector<uint8_t> mask_;
};

// Conv -> BatchNorm -> ReLU.
template <typename T>
class ConvBnRelu {
 public:
  ConvBnRelu() = default;
  ConvBnRelu(const std::string& name, int in_channels, int out_channels, int kernel, int stride = 1,
             int dilation = 1);

  Tensor<T> forward(const Tensor<T>& x, bool training, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy);
  void parameters(ParamRefs<T>& out);
  void init(Rng& rng);

  Conv2d<T> conv;
  BatchNorm2d<T> bn;

 private:
  ReLU<T> relu_;
};

// Bilinear upsampling by an integer factor (half-pixel centers).
template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int factor);
template <typename T>
Tensor<T> upsample_bilinear_backward(const Tensor<T>& dy, int factor, int in_h, int in_w);

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
void split_channels(const Tensor<T>& d, int channels_a, Tensor<T>& da, Tensor<T>& db);

// Affine map on row batches: y = x W^T + b, x is (M x in).
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in_features, int out_features);

  Tensor<T> forward(const Tensor<T>& x, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& dy);
  void parameters(ParamRefs<T>& out);
  void init(Rng& rng);

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Parameter<T> weight;  // (out x in)
  Parameter<T> bias;    // (out)

 private:
  int in_ = 0, out_ = 0;
  Tensor<T> x_;
};

}  // namespace glcnet
