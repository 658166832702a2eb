#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "glcnet/layers.hpp"

namespace glcnet {

// Names of the addressable parameter groups, in checkpoint order.
inline constexpr std::array<const char*, 7> kGroupNames = {
    "encoder", "decoder.1", "decoder.2", "decoder.3", "seg_head", "proj_global", "proj_local"};

bool is_group_name(const std::string& name);

struct NetworkConfig {
  int in_channels = 3;
  std::vector<int> encoder_widths{16, 32, 64, 64};
  std::vector<int> encoder_strides{2, 2, 2, 1};
  int encoder_depth = 1;    // 3x3 convolutions per encoder stage
  int low_level_stage = 1;  // stage whose output feeds the decoder skip connection
  std::vector<int> decoder_widths{32, 16, 16};
  int num_classes = 2;
  int projection_dim = 128;
  bool style_features = true;  // global head consumes mean+variance (2*C_e) instead of mean (C_e)

  void validate() const;
  int encoder_channels() const { return encoder_widths.back(); }
  int decoder_channels() const { return decoder_widths.back(); }
  int output_stride() const;
  int low_level_stride() const;
  int global_feature_dim() const { return style_features ? 2 * encoder_channels() : encoder_channels(); }
};

// g(.) / g_L(.): affine -> ReLU -> affine.
template <typename T>
class ProjectionHead {
 public:
  ProjectionHead() = default;
  ProjectionHead(const std::string& name, int input_dim, int hidden_dim, int output_dim);

  Tensor<T> forward(const Tensor<T>& features, bool keep_cache);
  Tensor<T> backward(const Tensor<T>& d_embeddings);
  void parameters(ParamRefs<T>& out);
  void init(Rng& rng);

  int input_dim() const { return first.in_features(); }
  int output_dim() const { return second.out_features(); }

  Linear<T> first;
  Linear<T> second;

 private:
  ReLU<T> relu_;
  std::vector<int> hidden_shape_;
};

template <typename T>
struct ParamGroup {
  std::string name;
  ParamRefs<T> params;
};

template <typename T>
class EncoderDecoderModel {
 public:
  explicit EncoderDecoderModel(const NetworkConfig& cfg);

  struct EncoderOutput {
    Tensor<T> features;   // (N, C_e, H/s, W/s)
    Tensor<T> low_level;  // skip features for the decoder
  };
  struct EncoderGrad {
    Tensor<T> features;
    Tensor<T> low_level;
  };

  EncoderOutput forward_encoder(const Tensor<T>& images, bool training, bool keep_cache = false);
  Tensor<T> forward_decoder(const EncoderOutput& enc, bool training, bool keep_cache = false);
  Tensor<T> forward_segmentation(const Tensor<T>& dense, bool keep_cache = false);

  // Full inference path: logits (N, num_classes, H, W).
  Tensor<T> predict_logits(const Tensor<T>& images);

  Tensor<T> backward_segmentation(const Tensor<T>& d_logits);
  EncoderGrad backward_decoder(const Tensor<T>& d_dense);
  // d_low_level may be empty when only the global path contributed.
  void backward_encoder(const Tensor<T>& d_features, const Tensor<T>& d_low_level);

  std::vector<ParamGroup<T>> groups();
  ParamRefs<T> trainable_parameters(const std::vector<std::string>& group_names);
  ParamRefs<T> all_parameters();

  void init(uint64_t seed);
  void init_group(const std::string& name, uint64_t seed);
  void zero_grad();

  const NetworkConfig& config() const { return cfg_; }

  ProjectionHead<T> proj_global;
  ProjectionHead<T> proj_local;

 private:
  NetworkConfig cfg_;
  std::vector<ConvBnRelu<T>> encoder_;  // flattened stages
  std::vector<int> stage_end_;          // index of the last layer of each stage
  ConvBnRelu<T> dec1_, dec2_, dec3_;
  Conv2d<T> seg_head_;
  int low_level_layer_ = 0;
  int dec1_h_ = 0, dec1_w_ = 0, dec3_h_ = 0, dec3_w_ = 0, low_channels_ = 0;
};

}  // namespace glcnet
