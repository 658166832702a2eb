#include "glcnet/network.hpp"

#include <algorithm>

#include "glcnet/error.hpp"

namespace glcnet {

bool is_group_name(const std::string& name) {
  return std::find(kGroupNames.begin(), kGroupNames.end(), name) != kGroupNames.end();
}

void NetworkConfig::validate() const {
  if (in_channels < 1) throw InvalidArgument("network needs at least one input channel");
  if (encoder_widths.empty() || encoder_widths.size() != encoder_strides.size()) {
    throw InvalidArgument("encoder widths and strides must be non-empty and of equal length");
  }
  for (int w : encoder_widths) {
    if (w < 1) throw InvalidArgument("encoder widths must be positive");
  }
  for (int s : encoder_strides) {
    if (s != 1 && s != 2) throw InvalidArgument("encoder strides must be 1 or 2");
  }
  if (encoder_depth < 1) throw InvalidArgument("encoder depth must be >= 1");
  if (low_level_stage < 0 || low_level_stage >= static_cast<int>(encoder_widths.size())) {
    throw InvalidArgument("low-level stage index out of range");
  }
  if (decoder_widths.size() != 3) throw InvalidArgument("decoder needs exactly three stage widths");
  for (int w : decoder_widths) {
    if (w < 1) throw InvalidArgument("decoder widths must be positive");
  }
  if (num_classes < 1) throw InvalidArgument("num_classes must be >= 1");
  if (projection_dim < 1) throw InvalidArgument("projection dim must be >= 1");
  if (output_stride() % low_level_stride() != 0) throw InvalidArgument("low-level stride must divide output stride");
}

int NetworkConfig::output_stride() const {
  int s = 1;
  for (int v : encoder_strides) s *= v;
  return s;
}

int NetworkConfig::low_level_stride() const {
  int s = 1;
  for (int i = 0; i <= low_level_stage; ++i) s *= encoder_strides[static_cast<size_t>(i)];
  return s;
}

// ---------------------------------------------------------------------------

template <typename T>
ProjectionHead<T>::ProjectionHead(const std::string& name, int input_dim, int hidden_dim, int output_dim)
    : first(name + ".fc1", input_dim, hidden_dim), second(name + ".fc2", hidden_dim, output_dim) {}

template <typename T>
Tensor<T> ProjectionHead<T>::forward(const Tensor<T>& features, bool keep_cache) {
  return second.forward(relu_.forward(first.forward(features, keep_cache), keep_cache), keep_cache);
}

template <typename T>
Tensor<T> ProjectionHead<T>::backward(const Tensor<T>& d_embeddings) {
  return first.backward(relu_.backward(second.backward(d_embeddings)));
}

template <typename T>
void ProjectionHead<T>::parameters(ParamRefs<T>& out) {
  first.parameters(out);
  second.parameters(out);
}

template <typename T>
void ProjectionHead<T>::init(Rng& rng) {
  first.init(rng);
  second.init(rng);
}

// ---------------------------------------------------------------------------

template <typename T>
EncoderDecoderModel<T>::EncoderDecoderModel(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  int in = cfg_.in_channels;
  bool strided_before = false;
  for (size_t s = 0; s < cfg_.encoder_widths.size(); ++s) {
    const int stride = cfg_.encoder_strides[s];
    const int dilation = (stride == 1 && strided_before) ? 2 : 1;
    for (int d = 0; d < cfg_.encoder_depth; ++d) {
      const std::string name = "encoder.stage" + std::to_string(s + 1) + "." + std::to_string(d + 1);
      encoder_.emplace_back(name, in, cfg_.encoder_widths[s], 3, d == 0 ? stride : 1, dilation);
      in = cfg_.encoder_widths[s];
    }
    stage_end_.push_back(static_cast<int>(encoder_.size()) - 1);
    strided_before = strided_before || stride > 1;
  }
  low_level_layer_ = stage_end_[static_cast<size_t>(cfg_.low_level_stage)];
  low_channels_ = cfg_.encoder_widths[static_cast<size_t>(cfg_.low_level_stage)];
  const auto& dw = cfg_.decoder_widths;
  dec1_ = ConvBnRelu<T>("decoder.1", cfg_.encoder_channels(), dw[0], 1);
  dec2_ = ConvBnRelu<T>("decoder.2", dw[0] + low_channels_, dw[1], 3);
  dec3_ = ConvBnRelu<T>("decoder.3", dw[1], dw[2], 3);
  seg_head_ = Conv2d<T>("seg_head.conv", dw[2], cfg_.num_classes, 1, 1, 0, 1, true);
  const int gdim = cfg_.global_feature_dim();
  proj_global = ProjectionHead<T>("proj_global", gdim, gdim, cfg_.projection_dim);
  proj_local = ProjectionHead<T>("proj_local", dw[2], dw[2], cfg_.projection_dim);
}

template <typename T>
typename EncoderDecoderModel<T>::EncoderOutput EncoderDecoderModel<T>::forward_encoder(const Tensor<T>& images,
                                                                                        bool training,
                                                                                        bool keep_cache) {
  if (images.ndim() != 4) throw InvalidArgument("encoder expects an NCHW image batch");
  if (images.dim(1) != cfg_.in_channels) {
    throw InvalidArgument("image batch has " + std::to_string(images.dim(1)) + " channels, model expects " +
                          std::to_string(cfg_.in_channels));
  }
  const int s = cfg_.output_stride();
  if (images.dim(2) % s != 0 || images.dim(3) % s != 0) {
    throw InvalidArgument("image size " + std::to_string(images.dim(2)) + "x" + std::to_string(images.dim(3)) +
                          " is not divisible by the encoder output stride " + std::to_string(s));
  }
  EncoderOutput out;
  Tensor<T> x = images;
  for (size_t i = 0; i < encoder_.size(); ++i) {
    x = encoder_[i].forward(x, training, keep_cache);
    if (static_cast<int>(i) == low_level_layer_) out.low_level = x;
  }
  out.features = std::move(x);
  return out;
}

template <typename T>
Tensor<T> EncoderDecoderModel<T>::forward_decoder(const EncoderOutput& enc, bool training, bool keep_cache) {
  if (enc.features.ndim() != 4 || enc.features.dim(1) != cfg_.encoder_channels() || enc.low_level.ndim() != 4 ||
      enc.low_level.dim(1) != low_channels_) {
    throw InvalidArgument("decoder input does not come from a matching encoder");
  }
  const int f1 = cfg_.output_stride() / cfg_.low_level_stride();
  Tensor<T> d1 = dec1_.forward(enc.features, training, keep_cache);
  const int h1 = d1.dim(2), w1 = d1.dim(3);
  Tensor<T> up = upsample_bilinear(d1, f1);
  if (up.dim(2) != enc.low_level.dim(2) || up.dim(3) != enc.low_level.dim(3)) {
    throw InvalidArgument("decoder skip connection shape mismatch");
  }
  Tensor<T> d2 = dec2_.forward(concat_channels(up, enc.low_level), training, keep_cache);
  Tensor<T> d3 = dec3_.forward(d2, training, keep_cache);
  if (keep_cache) {
    dec1_h_ = h1;
    dec1_w_ = w1;
    dec3_h_ = d3.dim(2);
    dec3_w_ = d3.dim(3);
  }
  return upsample_bilinear(d3, cfg_.low_level_stride());
}

template <typename T>
Tensor<T> EncoderDecoderModel<T>::forward_segmentation(const Tensor<T>& dense, bool keep_cache) {
  return seg_head_.forward(dense, keep_cache);
}

template <typename T>
Tensor<T> EncoderDecoderModel<T>::predict_logits(const Tensor<T>& images) {
  return forward_segmentation(forward_decoder(forward_encoder(images, false), false));
}

template <typename T>
Tensor<T> EncoderDecoderModel<T>::backward_segmentation(const Tensor<T>& d_logits) {
  return seg_head_.backward(d_logits);
}

template <typename T>
typename EncoderDecoderModel<T>::EncoderGrad EncoderDecoderModel<T>::backward_decoder(const Tensor<T>& d_dense) {
  Tensor<T> g3 = upsample_bilinear_backward(d_dense, cfg_.low_level_stride(), dec3_h_, dec3_w_);
  Tensor<T> g2 = dec3_.backward(g3);
  Tensor<T> gcat = dec2_.backward(g2);
  Tensor<T> gup, glow;
  split_channels(gcat, cfg_.decoder_widths[0], gup, glow);
  Tensor<T> g1 = upsample_bilinear_backward(gup, cfg_.output_stride() / cfg_.low_level_stride(), dec1_h_, dec1_w_);
  EncoderGrad out;
  out.features = dec1_.backward(g1);
  out.low_level = std::move(glow);
  return out;
}

template <typename T>
void EncoderDecoderModel<T>::backward_encoder(const Tensor<T>& d_features, const Tensor<T>& d_low_level) {
  Tensor<T> g = d_features;
  for (int i = static_cast<int>(encoder_.size()) - 1; i >= 0; --i) {
    if (i == low_level_layer_ && !d_low_level.empty()) {
      if (!g.same_shape(d_low_level)) throw InvalidArgument("low-level gradient shape mismatch");
      for (size_t k = 0; k < g.size(); ++k) g[k] += d_low_level[k];
    }
    g = encoder_[static_cast<size_t>(i)].backward(g);
  }
}

template <typename T>
std::vector<ParamGroup<T>> EncoderDecoderModel<T>::groups() {
  std::vector<ParamGroup<T>> out;
  ParamGroup<T> enc{"encoder", {}};
  for (auto& layer : encoder_) layer.parameters(enc.params);
  out.push_back(std::move(enc));
  ParamGroup<T> d1{"decoder.1", {}}, d2{"decoder.2", {}}, d3{"decoder.3", {}}, seg{"seg_head", {}},
      pg{"proj_global", {}}, pl{"proj_local", {}};
  dec1_.parameters(d1.params);
  dec2_.parameters(d2.params);
  dec3_.parameters(d3.params);
  seg_head_.parameters(seg.params);
  proj_global.parameters(pg.params);
  proj_local.parameters(pl.params);
  out.push_back(std::move(d1));
  out.push_back(std::move(d2));
  out.push_back(std::move(d3));
  out.push_back(std::move(seg));
  out.push_back(std::move(pg));
  out.push_back(std::move(pl));
  return out;
}

template <typename T>
ParamRefs<T> EncoderDecoderModel<T>::trainable_parameters(const std::vector<std::string>& group_names) {
  ParamRefs<T> out;
  for (auto& g : groups()) {
    if (std::find(group_names.begin(), group_names.end(), g.name) == group_names.end()) continue;
    for (auto* p : g.params) {
      if (p->trainable) out.push_back(p);
    }
  }
  return out;
}

template <typename T>
ParamRefs<T> EncoderDecoderModel<T>::all_parameters() {
  ParamRefs<T> out;
  for (auto& g : groups()) out.insert(out.end(), g.params.begin(), g.params.end());
  return out;
}

template <typename T>
void EncoderDecoderModel<T>::init_group(const std::string& name, uint64_t seed) {
  if (!is_group_name(name)) throw InvalidArgument("unknown parameter group '" + name + "'");
  Rng rng(Rng::derive(seed, "init." + name));
  if (name == "encoder") {
    for (auto& layer : encoder_) layer.init(rng);
  } else if (name == "decoder.1") {
    dec1_.init(rng);
  } else if (name == "decoder.2") {
    dec2_.init(rng);
  } else if (name == "decoder.3") {
    dec3_.init(rng);
  } else if (name == "seg_head") {
    seg_head_.init_he(rng);
  } else if (name == "proj_global") {
    proj_global.init(rng);
  } else {
    proj_local.init(rng);
  }
}

template <typename T>
void EncoderDecoderModel<T>::init(uint64_t seed) {
  for (const char* g : kGroupNames) init_group(g, seed);
}

template <typename T>
void EncoderDecoderModel<T>::zero_grad() {
  for (auto* p : all_parameters()) {
    if (p->trainable) p->grad.zero();
  }
}

template class ProjectionHead<float>;
template class ProjectionHead<double>;
template class EncoderDecoderModel<float>;
template class EncoderDecoderModel<double>;

}  // namespace glcnet
