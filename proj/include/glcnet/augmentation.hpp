#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "glcnet/image.hpp"
#include "glcnet/rng.hpp"

namespace glcnet {

// Per-pixel provenance: the (row, col) each pixel occupied in the original,
// pre-augmentation image.
struct IndexLabel {
  int height = 0;
  int width = 0;
  std::vector<int32_t> rows;
  std::vector<int32_t> cols;
  std::vector<uint8_t> valid;

  size_t offset(int r, int c) const { return static_cast<size_t>(r) * width + c; }
  int32_t row(int r, int c) const { return rows[offset(r, c)]; }
  int32_t col(int r, int c) const { return cols[offset(r, c)]; }
  bool is_valid(int r, int c) const { return valid[offset(r, c)] != 0; }

  bool operator==(const IndexLabel&) const = default;
};

IndexLabel build_index_label(int height, int width);

struct View {
  Image image;
  IndexLabel index;
};

struct CropWindow {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

// Transform descriptors. Each carries the ranges its parameters are sampled from.
struct RandomCropResize {
  double scale_min = 0.2;  // fraction of source area
  double scale_max = 1.0;
  double ratio_min = 3.0 / 4.0;
  double ratio_max = 4.0 / 3.0;
  bool resize = true;      // false: window is exactly the output size, no resampling
  int max_attempts = 10;
};

struct RandomFlip {
  double p_horizontal = 0.5;
  double p_vertical = 0.5;
};

// Rotation by a uniformly drawn multiple of 90 degrees.
struct RandomRotate90 {
  double probability = 1.0;
};

struct ColorJitter {
  double probability = 0.8;
  double brightness = 0.8;
  double contrast = 0.8;
  double saturation = 0.8;
  double hue = 0.2;
};

struct GaussianBlur {
  double probability = 0.5;
  double sigma_min = 0.1;
  double sigma_max = 2.0;
  double kernel_fraction = 0.1;  // kernel side relative to image side
};

struct GaussianNoise {
  double probability = 0.5;
  double stddev_min = 0.0;
  double stddev_max = 0.05;
};

struct RandomGrayscale {
  double probability = 0.2;
};

using TransformOp = std::variant<RandomCropResize, RandomFlip, RandomRotate90, ColorJitter, GaussianBlur,
                                 GaussianNoise, RandomGrayscale>;

bool is_spatial(const TransformOp& op);
std::string transform_name(const TransformOp& op);

struct AugmentationPipeline {
  std::vector<TransformOp> ops;
  int output_size = 224;

  void validate() const;
  bool photometric_only() const;

  // t1: random crop followed by resize.
  static AugmentationPipeline view_a(int output_size, const RandomCropResize& crop = {});
  // t2: crop+resize, flip, rotate, color distortion, blur, noise, grayscale.
  static AugmentationPipeline view_b(int output_size, const RandomCropResize& crop = {},
                                     const RandomFlip& flip = {}, const RandomRotate90& rot = {},
                                     const ColorJitter& jitter = {}, const GaussianBlur& blur = {},
                                     const GaussianNoise& noise = {}, const RandomGrayscale& gray = {});
};

// Spatial primitives, applied identically to image (bilinear) and index (nearest).
CropWindow sample_crop(int height, int width, const RandomCropResize& op, int output_size, Rng& rng);
View crop_resize(const View& in, const CropWindow& window, int out_height, int out_width);
View flip_horizontal(const View& in);
View flip_vertical(const View& in);
View rotate90(const View& in, int quarter_turns);

// Photometric primitives (image only).
void color_jitter(Image& img, double brightness_factor, double contrast_factor, double saturation_factor,
                  double hue_shift);
void gaussian_blur(Image& img, double sigma, int kernel_size);
void add_gaussian_noise(Image& img, double stddev, Rng& rng);
void to_grayscale(Image& img);

View apply_view(const Image& sample, const IndexLabel& index, const AugmentationPipeline& pipeline, Rng& rng);

struct ViewPair {
  View view_a;
  View view_b;
  uint64_t source_id = 0;
};

ViewPair make_view_pair(const Image& sample, uint64_t source_id, const AugmentationPipeline& t1,
                        const AugmentationPipeline& t2, Rng& rng);

}  // namespace glcnet
