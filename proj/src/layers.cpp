#include "glcnet/layers.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "glcnet/error.hpp"

namespace glcnet {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

void check_nchw(const std::vector<int>& s, const char* who) {
  if (s.size() != 4) throw InvalidArgument(std::string(who) + " expects an NCHW tensor");
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride, int padding,
                  int dilation, bool bias)
    : weight(name + ".weight", {out_channels, in_channels, kernel, kernel}),
      bias(name + ".bias", {bias ? out_channels : 0}),
      in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding),
      dil_(dilation),
      has_bias_(bias) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || dilation < 1 || padding < 0) {
    throw InvalidArgument("invalid convolution geometry for " + name);
  }
}

template <typename T>
void Conv2d<T>::init_he(Rng& rng) {
  const double stddev = std::sqrt(2.0 / (static_cast<double>(in_) * k_ * k_));
  for (T& v : weight.value.values()) v = static_cast<T>(rng.normal() * stddev);
  bias.value.zero();
}

template <typename T>
void Conv2d<T>::parameters(ParamRefs<T>& out) {
  out.push_back(&weight);
  if (has_bias_) out.push_back(&bias);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool keep_cache) {
  check_nchw(x.shape(), "conv2d");
  if (x.dim(1) != in_) {
    throw InvalidArgument(weight.name + ": input has " + std::to_string(x.dim(1)) + " channels, expected " +
                          std::to_string(in_));
  }
  const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int eff = dil_ * (k_ - 1) + 1;
  const int Ho = (H + 2 * pad_ - eff) / stride_ + 1;
  const int Wo = (W + 2 * pad_ - eff) / stride_ + 1;
  if (Ho < 1 || Wo < 1) throw InvalidArgument(weight.name + ": input too small for kernel");
  const int K = in_ * k_ * k_;
  const size_t P = static_cast<size_t>(Ho) * Wo;
  const size_t cols = static_cast<size_t>(N) * P;

  std::vector<T> col(static_cast<size_t>(K) * cols);
  for (int n = 0; n < N; ++n) {
    const T* xn = x.slice(n);
    for (int c = 0; c < in_; ++c) {
      for (int kh = 0; kh < k_; ++kh) {
        for (int kw = 0; kw < k_; ++kw) {
          T* dst = col.data() + (static_cast<size_t>((c * k_ + kh) * k_ + kw)) * cols + n * P;
          for (int oh = 0; oh < Ho; ++oh) {
            const int ih = oh * stride_ - pad_ + kh * dil_;
            T* drow = dst + static_cast<size_t>(oh) * Wo;
            if (ih < 0 || ih >= H) {
              std::fill(drow, drow + Wo, T(0));
              continue;
            }
            const T* srow = xn + (static_cast<size_t>(c) * H + ih) * W;
            for (int ow = 0; ow < Wo; ++ow) {
              const int iw = ow * stride_ - pad_ + kw * dil_;
              drow[ow] = (iw >= 0 && iw < W) ? srow[iw] : T(0);
            }
          }
        }
      }
    }
  }

  RowMat<T> Y(out_, static_cast<Eigen::Index>(cols));
  Y.noalias() = ConstMapMat<T>(weight.value.data(), out_, K) * ConstMapMat<T>(col.data(), K, static_cast<Eigen::Index>(cols));

  Tensor<T> y({N, out_, Ho, Wo});
  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < out_; ++o) {
      const T b = has_bias_ ? bias.value[static_cast<size_t>(o)] : T(0);
      const T* src = Y.data() + static_cast<size_t>(o) * cols + n * P;
      T* dst = y.data() + (static_cast<size_t>(n) * out_ + o) * P;
      for (size_t p = 0; p < P; ++p) dst[p] = src[p] + b;
    }
  }
  if (keep_cache) {
    col_ = std::move(col);
    in_shape_ = x.shape();
    out_h_ = Ho;
    out_w_ = Wo;
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
  if (in_shape_.empty()) throw StateError(weight.name + ": backward without cached forward");
  const int N = in_shape_[0], H = in_shape_[2], W = in_shape_[3];
  const int Ho = out_h_, Wo = out_w_;
  const int K = in_ * k_ * k_;
  const size_t P = static_cast<size_t>(Ho) * Wo;
  const size_t cols = static_cast<size_t>(N) * P;
  if (dy.shape() != std::vector<int>{N, out_, Ho, Wo}) throw InvalidArgument(weight.name + ": gradient shape mismatch");

  RowMat<T> dY(out_, static_cast<Eigen::Index>(cols));
  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < out_; ++o) {
      const T* src = dy.data() + (static_cast<size_t>(n) * out_ + o) * P;
      std::copy(src, src + P, dY.data() + static_cast<size_t>(o) * cols + n * P);
    }
  }
  const ConstMapMat<T> col(col_.data(), K, static_cast<Eigen::Index>(cols));
  MapMat<T>(weight.grad.data(), out_, K).noalias() += dY * col.transpose();
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) bias.grad[static_cast<size_t>(o)] += dY.row(o).sum();
  }
  RowMat<T> dcol(K, static_cast<Eigen::Index>(cols));
  dcol.noalias() = ConstMapMat<T>(weight.value.data(), out_, K).transpose() * dY;

  Tensor<T> dx(in_shape_);
  for (int n = 0; n < N; ++n) {
    T* dxn = dx.slice(n);
    for (int c = 0; c < in_; ++c) {
      for (int kh = 0; kh < k_; ++kh) {
        for (int kw = 0; kw < k_; ++kw) {
          const T* src = dcol.data() + (static_cast<size_t>((c * k_ + kh) * k_ + kw)) * cols + n * P;
          for (int oh = 0; oh < Ho; ++oh) {
            const int ih = oh * stride_ - pad_ + kh * dil_;
            if (ih < 0 || ih >= H) continue;
            T* drow = dxn + (static_cast<size_t>(c) * H + ih) * W;
            const T* srow = src + static_cast<size_t>(oh) * Wo;
            for (int ow = 0; ow < Wo; ++ow) {
              const int iw = ow * stride_ - pad_ + kw * dil_;
              if (iw >= 0 && iw < W) drow[iw] += srow[ow];
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(const std::string& name, int channels, double eps, double momentum)
    : gamma(name + ".weight", {channels}),
      beta(name + ".bias", {channels}),
      running_mean(name + ".running_mean", {channels}, false),
      running_var(name + ".running_var", {channels}, false),
      channels_(channels),
      eps_(eps),
      momentum_(momentum) {
  init();
}

template <typename T>
void BatchNorm2d<T>::init() {
  gamma.value.fill(T(1));
  beta.value.zero();
  running_mean.value.zero();
  running_var.value.fill(T(1));
}

template <typename T>
void BatchNorm2d<T>::parameters(ParamRefs<T>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
  out.push_back(&running_mean);
  out.push_back(&running_var);
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, bool training, bool keep_cache) {
  check_nchw(x.shape(), "batchnorm");
  if (x.dim(1) != channels_) throw InvalidArgument(gamma.name + ": channel mismatch");
  const int N = x.dim(0), C = channels_;
  const size_t P = static_cast<size_t>(x.dim(2)) * x.dim(3);
  const double M = static_cast<double>(N) * P;
  std::vector<double> mean(static_cast<size_t>(C)), inv(static_cast<size_t>(C));
  if (training) {
    if (M < 2) throw InvalidArgument(gamma.name + ": batch statistics need more than one value per channel");
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.data() + (static_cast<size_t>(n) * C + c) * P;
        for (size_t i = 0; i < P; ++i) s += p[i];
      }
      const double mu = s / M;
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.data() + (static_cast<size_t>(n) * C + c) * P;
        for (size_t i = 0; i < P; ++i) v += (p[i] - mu) * (p[i] - mu);
      }
      const double var = v / M;
      mean[c] = mu;
      inv[c] = 1.0 / std::sqrt(var + eps_);
      running_mean.value[c] = static_cast<T>((1 - momentum_) * running_mean.value[c] + momentum_ * mu);
      running_var.value[c] = static_cast<T>((1 - momentum_) * running_var.value[c] + momentum_ * v / (M - 1));
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean.value[c];
      inv[c] = 1.0 / std::sqrt(static_cast<double>(running_var.value[c]) + eps_);
    }
  }
  Tensor<T> y(x.shape());
  Tensor<T> xhat;
  if (keep_cache) xhat = Tensor<T>(x.shape());
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const size_t off = (static_cast<size_t>(n) * C + c) * P;
      const T g = gamma.value[c], b = beta.value[c];
      const T mu = static_cast<T>(mean[c]), is = static_cast<T>(inv[c]);
      for (size_t i = 0; i < P; ++i) {
        const T h = (x[off + i] - mu) * is;
        if (keep_cache) xhat[off + i] = h;
        y[off + i] = h * g + b;
      }
    }
  }
  if (keep_cache) {
    xhat_ = std::move(xhat);
    inv_std_ = std::move(inv);
    batch_stats_ = training;
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& dy) {
  if (!dy.same_shape(xhat_)) throw StateError(gamma.name + ": backward without matching forward");
  const int N = dy.dim(0), C = channels_;
  const size_t P = static_cast<size_t>(dy.dim(2)) * dy.dim(3);
  const double M = static_cast<double>(N) * P;
  Tensor<T> dx(dy.shape());
  for (int c = 0; c < C; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < N; ++n) {
      const size_t off = (static_cast<size_t>(n) * C + c) * P;
      for (size_t i = 0; i < P; ++i) {
        sum_dy += dy[off + i];
        sum_dy_xhat += static_cast<double>(dy[off + i]) * xhat_[off + i];
      }
    }
    gamma.grad[c] += static_cast<T>(sum_dy_xhat);
    beta.grad[c] += static_cast<T>(sum_dy);
    const double g = gamma.value[c];
    const double is = inv_std_[c];
    for (int n = 0; n < N; ++n) {
      const size_t off = (static_cast<size_t>(n) * C + c) * P;
      if (batch_stats_) {
        const double k = g * is / M;
        for (size_t i = 0; i < P; ++i) {
          dx[off + i] = static_cast<T>(k * (M * dy[off + i] - sum_dy - xhat_[off + i] * sum_dy_xhat));
        }
      } else {
        for (size_t i = 0; i < P; ++i) dx[off + i] = static_cast<T>(g * is * dy[off + i]);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ReLU

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, bool keep_cache) {
  Tensor<T> y(x.shape());
  if (keep_cache) mask_.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const bool on = x[i] > T(0);
    y[i] = on ? x[i] : T(0);
    if (keep_cache) mask_[i] = on;
  }
  return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& dy) const {
  if (dy.size() != mask_.size()) throw StateError("relu: backward without matching forward");
  Tensor<T> dx(dy.shape());
  for (size_t i = 0; i < dy.size(); ++i) dx[i] = mask_[i] ? dy[i] : T(0);
  return dx;
}

// ---------------------------------------------------------------------------
// ConvBnRelu

template <typename T>
ConvBnRelu<T>::ConvBnRelu(const std::string& name, int in_channels, int out_channels, int kernel, int stride,
                          int dilation)
    : conv(name + ".conv", in_channels, out_channels, kernel, stride, dilation * (kernel / 2), dilation, false),
      bn(name + ".bn", out_channels) {}

template <typename T>
Tensor<T> ConvBnRelu<T>::forward(const Tensor<T>& x, bool training, bool keep_cache) {
  return relu_.forward(bn.forward(conv.forward(x, keep_cache), training, keep_cache), keep_cache);
}

template <typename T>
Tensor<T> ConvBnRelu<T>::backward(const Tensor<T>& dy) {
  return conv.backward(bn.backward(relu_.backward(dy)));
}

template <typename T>
void ConvBnRelu<T>::parameters(ParamRefs<T>& out) {
  conv.parameters(out);
  bn.parameters(out);
}

template <typename T>
void ConvBnRelu<T>::init(Rng& rng) {
  conv.init_he(rng);
  bn.init();
}

// ---------------------------------------------------------------------------
// Upsampling / channel plumbing

namespace {

struct Tap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(int in, int factor) {
  std::vector<Tap> taps(static_cast<size_t>(in) * factor);
  for (size_t o = 0; o < taps.size(); ++o) {
    double s = (static_cast<double>(o) + 0.5) / factor - 0.5;
    if (s < 0) s = 0;
    const int i0 = std::min(static_cast<int>(s), in - 1);
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, s - i0};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int factor) {
  check_nchw(x.shape(), "upsample");
  if (factor < 1) throw InvalidArgument("upsample factor must be >= 1");
  if (factor == 1) return x;
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = H * factor, Wo = W * factor;
  const auto ty = bilinear_taps(H, factor), tx = bilinear_taps(W, factor);
  Tensor<T> y({N, C, Ho, Wo});
  for (int nc = 0; nc < N * C; ++nc) {
    const T* src = x.data() + static_cast<size_t>(nc) * H * W;
    T* dst = y.data() + static_cast<size_t>(nc) * Ho * Wo;
    for (int oy = 0; oy < Ho; ++oy) {
      const Tap& a = ty[oy];
      const T* r0 = src + static_cast<size_t>(a.i0) * W;
      const T* r1 = src + static_cast<size_t>(a.i1) * W;
      const T wy = static_cast<T>(a.w1);
      for (int ox = 0; ox < Wo; ++ox) {
        const Tap& b = tx[ox];
        const T wx = static_cast<T>(b.w1);
        const T top = r0[b.i0] + (r0[b.i1] - r0[b.i0]) * wx;
        const T bot = r1[b.i0] + (r1[b.i1] - r1[b.i0]) * wx;
        dst[static_cast<size_t>(oy) * Wo + ox] = top + (bot - top) * wy;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample_bilinear_backward(const Tensor<T>& dy, int factor, int H, int W) {
  if (factor == 1) return dy;
  const int N = dy.dim(0), C = dy.dim(1), Ho = dy.dim(2), Wo = dy.dim(3);
  if (Ho != H * factor || Wo != W * factor) throw InvalidArgument("upsample backward: shape mismatch");
  const auto ty = bilinear_taps(H, factor), tx = bilinear_taps(W, factor);
  Tensor<T> dx({N, C, H, W});
  for (int nc = 0; nc < N * C; ++nc) {
    const T* src = dy.data() + static_cast<size_t>(nc) * Ho * Wo;
    T* dst = dx.data() + static_cast<size_t>(nc) * H * W;
    for (int oy = 0; oy < Ho; ++oy) {
      const Tap& a = ty[oy];
      const T wy1 = static_cast<T>(a.w1), wy0 = T(1) - wy1;
      for (int ox = 0; ox < Wo; ++ox) {
        const Tap& b = tx[ox];
        const T wx1 = static_cast<T>(b.w1), wx0 = T(1) - wx1;
        const T g = src[static_cast<size_t>(oy) * Wo + ox];
        dst[static_cast<size_t>(a.i0) * W + b.i0] += g * wy0 * wx0;
        dst[static_cast<size_t>(a.i0) * W + b.i1] += g * wy0 * wx1;
        dst[static_cast<size_t>(a.i1) * W + b.i0] += g * wy1 * wx0;
        dst[static_cast<size_t>(a.i1) * W + b.i1] += g * wy1 * wx1;
      }
    }
  }
  return dx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  check_nchw(a.shape(), "concat");
  check_nchw(b.shape(), "concat");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw InvalidArgument("concat: batch or spatial mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  const int N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1);
  const size_t P = static_cast<size_t>(a.dim(2)) * a.dim(3);
  Tensor<T> y({N, Ca + Cb, a.dim(2), a.dim(3)});
  for (int n = 0; n < N; ++n) {
    std::copy(a.slice(n), a.slice(n) + Ca * P, y.slice(n));
    std::copy(b.slice(n), b.slice(n) + Cb * P, y.slice(n) + Ca * P);
  }
  return y;
}

template <typename T>
void split_channels(const Tensor<T>& d, int channels_a, Tensor<T>& da, Tensor<T>& db) {
  const int N = d.dim(0), C = d.dim(1), Cb = C - channels_a;
  const size_t P = static_cast<size_t>(d.dim(2)) * d.dim(3);
  da = Tensor<T>({N, channels_a, d.dim(2), d.dim(3)});
  db = Tensor<T>({N, Cb, d.dim(2), d.dim(3)});
  for (int n = 0; n < N; ++n) {
    std::copy(d.slice(n), d.slice(n) + channels_a * P, da.slice(n));
    std::copy(d.slice(n) + channels_a * P, d.slice(n) + C * P, db.slice(n));
  }
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
Linear<T>::Linear(const std::string& name, int in_features, int out_features)
    : weight(name + ".weight", {out_features, in_features}),
      bias(name + ".bias", {out_features}),
      in_(in_features),
      out_(out_features) {
  if (in_features < 1 || out_features < 1) throw InvalidArgument("invalid linear layer size for " + name);
}

template <typename T>
void Linear<T>::init(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  for (T& v : weight.value.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  bias.value.zero();
}

template <typename T>
void Linear<T>::parameters(ParamRefs<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, bool keep_cache) {
  if (x.ndim() != 2 || x.dim(1) != in_) {
    throw InvalidArgument(weight.name + ": input " + x.shape_str() + " does not match in_features " +
                          std::to_string(in_));
  }
  const int M = x.dim(0);
  Tensor<T> y({M, out_});
  MapMat<T> Y(y.data(), M, out_);
  Y.noalias() = ConstMapMat<T>(x.data(), M, in_) * ConstMapMat<T>(weight.value.data(), out_, in_).transpose();
  for (int m = 0; m < M; ++m) {
    for (int o = 0; o < out_; ++o) Y(m, o) += bias.value[static_cast<size_t>(o)];
  }
  if (keep_cache) x_ = x;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& dy) {
  const int M = x_.dim(0);
  if (dy.shape() != std::vector<int>{M, out_}) throw StateError(weight.name + ": backward shape mismatch");
  const ConstMapMat<T> dY(dy.data(), M, out_);
  MapMat<T>(weight.grad.data(), out_, in_).noalias() += dY.transpose() * ConstMapMat<T>(x_.data(), M, in_);
  for (int o = 0; o < out_; ++o) bias.grad[static_cast<size_t>(o)] += dY.col(o).sum();
  Tensor<T> dx({M, in_});
  MapMat<T>(dx.data(), M, in_).noalias() = dY * ConstMapMat<T>(weight.value.data(), out_, in_);
  return dx;
}

#define GLCNET_INSTANTIATE(T)                                                                      \
  template class Conv2d<T>;                                                                        \
  template class BatchNorm2d<T>;                                                                   \
  template class ReLU<T>;                                                                          \
  template class ConvBnRelu<T>;                                                                    \
  template class Linear<T>;                                                                        \
  template Tensor<T> upsample_bilinear<T>(const Tensor<T>&, int);                                  \
  template Tensor<T> upsample_bilinear_backward<T>(const Tensor<T>&, int, int, int);               \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template void split_channels<T>(const Tensor<T>&, int, Tensor<T>&, Tensor<T>&);

GLCNET_INSTANTIATE(float)
GLCNET_INSTANTIATE(double)

#undef GLCNET_INSTANTIATE

}  // namespace glcnet
