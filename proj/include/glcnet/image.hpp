#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace glcnet {

// Planar (C x H x W) image with samples nominally in [0, 1].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.f)
      : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, fill) {}

  size_t plane() const { return static_cast<size_t>(height) * width; }
  float& at(int c, int r, int col) { return data[c * plane() + static_cast<size_t>(r) * width + col]; }
  float at(int c, int r, int col) const {
    return data[c * plane() + static_cast<size_t>(r) * width + col];
  }
  float* channel(int c) { return data.data() + c * plane(); }
  const float* channel(int c) const { return data.data() + c * plane(); }

  bool operator==(const Image&) const = default;
};

// Per-pixel integer class map (H x W).
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int32_t> data;

  LabelMap() = default;
  LabelMap(int h, int w, int32_t fill = 0)
      : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

  int32_t& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
  int32_t at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }

  bool operator==(const LabelMap&) const = default;
};

// Image file I/O. PNG holds 1-4 bands at 8 bits; TIFF holds any band count
// (8/16-bit integer or 32-bit float on read, 8-bit on write).
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

LabelMap read_label_map(const std::filesystem::path& path);
void write_label_map(const std::filesystem::path& path, const LabelMap& mask);

// 8-bit quantization used by the tile writer; read_image(write_image(x)) equals
// quantize(x) exactly.
uint8_t quantize_u8(float v);
Image quantized(const Image& image);

bool is_image_file(const std::filesystem::path& path);

}  // namespace glcnet
