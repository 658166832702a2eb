#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "glcnet/augmentation.hpp"
#include "glcnet/checkpoint.hpp"
#include "glcnet/contrastive.hpp"
#include "glcnet/data_pipeline.hpp"
#include "glcnet/network.hpp"
#include "glcnet/optim.hpp"

namespace glcnet {

// Second half of the style vector: variance (default) or standard deviation.
enum class StyleMode { kVariance, kStd };

inline constexpr double kStyleStdEps = 1e-5;

// Batched style features: (N, C, h, w) -> (N, 2C) = [mean | variance], or
// (N, C) = mean only when use_style is false (plain global average pooling).
template <typename T>
Tensor<T> extract_style(const Tensor<T>& features, bool use_style = true, StyleMode mode = StyleMode::kVariance);
template <typename T>
Tensor<T> extract_style_backward(const Tensor<T>& features, const Tensor<T>& d_style, bool use_style = true,
                                 StyleMode mode = StyleMode::kVariance);

// Single map (C x h x w, row-major) -> style vector of length 2C.
std::vector<double> extract_style(const std::vector<double>& map, int channels, int height, int width,
                                  StyleMode mode = StyleMode::kVariance);

struct RegionRect {
  int top = 0;
  int left = 0;
  int size = 0;

  bool contains(double r, double c) const {
    return r >= top && r <= top + size - 1 && c >= left && c <= left + size - 1;
  }
  bool operator==(const RegionRect&) const = default;
};

struct LocalRegionSpec {
  double center_row = 0;  // original-image coordinates of the region-a center
  double center_col = 0;
  int size = 0;
  RegionRect rect_a;
  RegionRect rect_b;
  double match_distance = 0;  // |center(b) - center(a)| in original pixels
  int border_shift = 0;       // inward shift applied to rect_b, pixels
};

struct LocalMatchConfig {
  int region_size = 48;
  int regions_per_sample = 4;
  double match_tolerance = 1.0;  // max distance between matched centers, original pixels
  int max_border_shift = 0;      // 0: discard matches whose rect leaves view b
  int max_attempts = 0;          // 0: 10 * regions_per_sample

  void validate(int view_height, int view_width) const;
};

// Original coordinate of the center of an s x s rect: the mean index value of
// its central pixel (odd s) or central 2x2 block (even s).
bool region_center(const IndexLabel& index, int top, int left, int size, double& row, double& col);

std::vector<LocalRegionSpec> select_local_regions(const IndexLabel& index_a, const IndexLabel& index_b,
                                                  const LocalMatchConfig& cfg, Rng& rng);

struct RegionRef {
  int sample = 0;  // batch index in the dense map
  RegionRect rect;
};

// Per-channel spatial means over each rect: (R, C).
template <typename T>
Tensor<T> extract_local_features(const Tensor<T>& dense, const std::vector<RegionRef>& regions);
template <typename T>
void extract_local_features_backward(const Tensor<T>& d_features, const std::vector<RegionRef>& regions,
                                     Tensor<T>& d_dense);

// Loss value plus the gradient w.r.t. the head input features. The head's
// parameter gradients are accumulated, scaled by `weight`.
template <typename T>
struct HeadLoss {
  double loss = 0;
  bool skipped = false;
  Tensor<T> d_input;
};

// NT-Xent over head(features) with the two-view layout [a_1..a_n, b_1..b_n].
template <typename T>
HeadLoss<T> projected_contrastive_loss(const Tensor<T>& features, ProjectionHead<T>& head,
                                       const ContrastiveConfig& cfg, double weight, bool with_grad);

template <typename T>
HeadLoss<T> global_style_loss(const Tensor<T>& encoder_maps, ProjectionHead<T>& head, const ContrastiveConfig& cfg,
                              bool use_style, StyleMode mode, double weight, bool with_grad);

// local_features: [a_1..a_R, b_1..b_R]; fewer than 2 pairs is a skip (loss 0).
template <typename T>
HeadLoss<T> local_matching_loss(const Tensor<T>& local_features, ProjectionHead<T>& head,
                                const ContrastiveConfig& cfg, double weight, bool with_grad);

double total_loss(double global, double local, double lambda);

struct GLCNetConfig {
  double lambda = 0.5;
  ContrastiveConfig contrastive;
  LocalMatchConfig local;
  StyleMode style_mode = StyleMode::kVariance;
  int view_size = 224;
  int batch_size = 64;
  int epochs = 400;
  double lr = 0.01;
  int max_steps = 0;  // 0: no limit
  bool nostyle = false;
  bool noglobe = false;
  bool nolocal = false;
  uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  double global_weight() const;
  double local_weight() const;
  double combine(double global, double local) const;
};

struct LossReport {
  int epoch = 0;
  int64_t step = 0;
  double global = 0;
  double local = 0;
  double total = 0;
  double lr = 0;
  int64_t regions = 0;  // realized local pairs; summed over the epoch in per-epoch rows
};

struct StepResult {
  LossReport report;
  bool local_skipped = false;
};

// One optimization step on an already-augmented batch: views[i] and
// views[n + i] are the two views of sample i.
class PretrainStep {
 public:
  PretrainStep(EncoderDecoderModel<float>& model, const GLCNetConfig& cfg);

  // Computes the losses and gradients; `apply` also takes the optimizer step.
  StepResult run(const std::vector<View>& views, const std::vector<std::vector<LocalRegionSpec>>& regions,
                 double lr, bool apply = true);

  Adam<float>& optimizer() { return adam_; }

 private:
  EncoderDecoderModel<float>& model_;
  GLCNetConfig cfg_;
  Adam<float> adam_;
};

std::vector<std::string> pretrain_groups();

Tensor<float> stack_views(const std::vector<View>& views);

struct PretrainJob {
  DatasetManifest manifest;
  std::filesystem::path manifest_dir;
  GLCNetConfig cfg;
  AugmentationPipeline t1;
  AugmentationPipeline t2;
  std::filesystem::path out_dir;  // empty: keep results in memory only
  std::map<std::string, std::string> metadata;
};

struct PretrainResult {
  std::vector<LossReport> epochs;
  std::vector<LossReport> steps;
  double best_loss = 0;
  int best_epoch = -1;
  CheckpointBundle best;
  int64_t local_skips = 0;
};

std::string loss_csv(const std::vector<LossReport>& rows);

PretrainResult run_pretraining(EncoderDecoderModel<float>& model, const PretrainJob& job);

}  // namespace glcnet
