#include "glcnet/augmentation.hpp"

#include <algorithm>
#include <cmath>

#include "glcnet/error.hpp"

namespace glcnet {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Plain average of the first three bands (or the single band).
std::vector<float> gray_plane(const Image& img) {
  const size_t plane = img.plane();
  const int bands = img.channels >= 3 ? 3 : 1;
  std::vector<float> g(plane, 0.f);
  for (int c = 0; c < bands; ++c) {
    const float* p = img.channel(c);
    for (size_t i = 0; i < plane; ++i) g[i] += p[i];
  }
  for (float& v : g) v /= static_cast<float>(bands);
  return g;
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx > 0.f ? d / mx : 0.f;
  if (d <= 0.f) {
    h = 0.f;
    return;
  }
  if (mx == r) {
    h = (g - b) / d;
  } else if (mx == g) {
    h = 2.f + (b - r) / d;
  } else {
    h = 4.f + (r - g) / d;
  }
  h /= 6.f;
  if (h < 0.f) h += 1.f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  const float hh = (h - std::floor(h)) * 6.f;
  const int i = static_cast<int>(hh) % 6;
  const float f = hh - std::floor(hh);
  const float p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

}  // namespace

IndexLabel build_index_label(int height, int width) {
  if (height < 1 || width < 1) throw InvalidArgument("index label needs positive dimensions");
  IndexLabel idx;
  idx.height = height;
  idx.width = width;
  const size_t n = static_cast<size_t>(height) * width;
  idx.rows.resize(n);
  idx.cols.resize(n);
  idx.valid.assign(n, 1);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      idx.rows[idx.offset(r, c)] = r;
      idx.cols[idx.offset(r, c)] = c;
    }
  }
  return idx;
}

bool is_spatial(const TransformOp& op) {
  return std::holds_alternative<RandomCropResize>(op) || std::holds_alternative<RandomFlip>(op) ||
         std::holds_alternative<RandomRotate90>(op);
}

std::string transform_name(const TransformOp& op) {
  return std::visit(Overloaded{
                        [](const RandomCropResize&) { return std::string("crop_resize"); },
                        [](const RandomFlip&) { return std::string("flip"); },
                        [](const RandomRotate90&) { return std::string("rotate90"); },
                        [](const ColorJitter&) { return std::string("color_jitter"); },
                        [](const GaussianBlur&) { return std::string("gaussian_blur"); },
                        [](const GaussianNoise&) { return std::string("gaussian_noise"); },
                        [](const RandomGrayscale&) { return std::string("grayscale"); },
                    },
                    op);
}

void AugmentationPipeline::validate() const {
  if (output_size < 1) throw InvalidArgument("augmentation output size must be positive");
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(what) + " probability outside [0,1]");
  };
  for (const auto& op : ops) {
    std::visit(Overloaded{
                   [](const RandomCropResize& c) {
                     if (!(c.scale_min > 0 && c.scale_min <= c.scale_max && c.scale_max <= 1.0)) {
                       throw InvalidArgument("crop scale range must satisfy 0 < min <= max <= 1");
                     }
                     if (!(c.ratio_min > 0 && c.ratio_min <= c.ratio_max)) {
                       throw InvalidArgument("crop aspect ratio range invalid");
                     }
                     if (c.max_attempts < 1) throw InvalidArgument("crop attempts must be >= 1");
                   },
                   [&](const RandomFlip& f) {
                     prob(f.p_horizontal, "horizontal flip");
                     prob(f.p_vertical, "vertical flip");
                   },
                   [&](const RandomRotate90& r) { prob(r.probability, "rotation"); },
                   [&](const ColorJitter& j) {
                     prob(j.probability, "color jitter");
                     if (j.brightness < 0 || j.contrast < 0 || j.saturation < 0 || j.hue < 0 || j.hue > 0.5) {
                       throw InvalidArgument("color jitter strengths out of range");
                     }
                   },
                   [&](const GaussianBlur& b) {
                     prob(b.probability, "blur");
                     if (!(b.sigma_min > 0 && b.sigma_min <= b.sigma_max)) throw InvalidArgument("blur sigma range invalid");
                   },
                   [&](const GaussianNoise& n) {
                     prob(n.probability, "noise");
                     if (!(n.stddev_min >= 0 && n.stddev_min <= n.stddev_max)) throw InvalidArgument("noise range invalid");
                   },
                   [&](const RandomGrayscale& g) { prob(g.probability, "grayscale"); },
               },
               op);
  }
}

bool AugmentationPipeline::photometric_only() const {
  return std::none_of(ops.begin(), ops.end(), [](const TransformOp& op) { return is_spatial(op); });
}

AugmentationPipeline AugmentationPipeline::view_a(int output_size, const RandomCropResize& crop) {
  AugmentationPipeline p;
  p.output_size = output_size;
  p.ops = {crop};
  return p;
}

AugmentationPipeline AugmentationPipeline::view_b(int output_size, const RandomCropResize& crop,
                                                  const RandomFlip& flip, const RandomRotate90& rot,
                                                  const ColorJitter& jitter, const GaussianBlur& blur,
                                                  const GaussianNoise& noise, const RandomGrayscale& gray) {
  AugmentationPipeline p;
  p.output_size = output_size;
  p.ops = {crop, flip, rot, jitter, blur, noise, gray};
  return p;
}

CropWindow sample_crop(int height, int width, const RandomCropResize& op, int output_size, Rng& rng) {
  if (height < 1 || width < 1) throw InvalidArgument("cannot crop an empty image");
  if (!op.resize) {
    if (height < output_size || width < output_size) {
      throw InvalidArgument("crop without resize needs a source of at least the output size");
    }
    CropWindow w{0, 0, output_size, output_size};
    w.top = static_cast<int>(rng.range(0, height - output_size));
    w.left = static_cast<int>(rng.range(0, width - output_size));
    return w;
  }
  const double area = static_cast<double>(height) * width;
  const double log_lo = std::log(op.ratio_min), log_hi = std::log(op.ratio_max);
  for (int attempt = 0; attempt < op.max_attempts; ++attempt) {
    const double target = area * rng.uniform(op.scale_min, op.scale_max);
    const double ratio = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target * ratio)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / ratio)));
    if (w >= 1 && h >= 1 && w <= width && h <= height) {
      CropWindow win{0, 0, h, w};
      win.top = static_cast<int>(rng.range(0, height - h));
      win.left = static_cast<int>(rng.range(0, width - w));
      return win;
    }
  }
  // No sampled window fit: fall back to the largest centered window whose
  // aspect ratio lies in range.
  const double in_ratio = static_cast<double>(width) / height;
  int w = width, h = height;
  if (in_ratio < op.ratio_min) {
    h = static_cast<int>(std::lround(w / op.ratio_min));
  } else if (in_ratio > op.ratio_max) {
    w = static_cast<int>(std::lround(h * op.ratio_max));
  }
  if (w < 1 || h < 1) throw InvalidArgument("degenerate crop window after retries");
  return {(height - h) / 2, (width - w) / 2, h, w};
}

View crop_resize(const View& in, const CropWindow& win, int out_h, int out_w) {
  const Image& src = in.image;
  if (win.top < 0 || win.left < 0 || win.height < 1 || win.width < 1 || win.top + win.height > src.height ||
      win.left + win.width > src.width) {
    throw InvalidArgument("crop window outside the image");
  }
  if (out_h < 1 || out_w < 1) throw InvalidArgument("resize target must be positive");
  View out;
  out.image = Image(src.channels, out_h, out_w);
  out.index.height = out_h;
  out.index.width = out_w;
  const size_t n = static_cast<size_t>(out_h) * out_w;
  out.index.rows.resize(n);
  out.index.cols.resize(n);
  out.index.valid.resize(n);

  const double sy = static_cast<double>(win.height) / out_h;
  const double sx = static_cast<double>(win.width) / out_w;
  std::vector<int> x0(static_cast<size_t>(out_w)), x1(static_cast<size_t>(out_w)), xn(static_cast<size_t>(out_w));
  std::vector<float> fx(static_cast<size_t>(out_w));
  for (int x = 0; x < out_w; ++x) {
    const double s = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(win.width - 1));
    x0[x] = static_cast<int>(s);
    x1[x] = std::min(x0[x] + 1, win.width - 1);
    fx[x] = static_cast<float>(s - x0[x]);
    xn[x] = std::min(static_cast<int>((x + 0.5) * sx), win.width - 1);
  }
  for (int y = 0; y < out_h; ++y) {
    const double s = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(win.height - 1));
    const int y0 = static_cast<int>(s), y1 = std::min(y0 + 1, win.height - 1);
    const float fy = static_cast<float>(s - y0);
    const int yn = std::min(static_cast<int>((y + 0.5) * sy), win.height - 1);
    for (int c = 0; c < src.channels; ++c) {
      const float* r0 = src.channel(c) + static_cast<size_t>(win.top + y0) * src.width + win.left;
      const float* r1 = src.channel(c) + static_cast<size_t>(win.top + y1) * src.width + win.left;
      float* dst = out.image.channel(c) + static_cast<size_t>(y) * out_w;
      for (int x = 0; x < out_w; ++x) {
        const float top = r0[x0[x]] + (r0[x1[x]] - r0[x0[x]]) * fx[x];
        const float bot = r1[x0[x]] + (r1[x1[x]] - r1[x0[x]]) * fx[x];
        dst[x] = top + (bot - top) * fy;
      }
    }
    for (int x = 0; x < out_w; ++x) {
      const size_t s_off = in.index.offset(win.top + yn, win.left + xn[x]);
      const size_t d_off = out.index.offset(y, x);
      out.index.rows[d_off] = in.index.rows[s_off];
      out.index.cols[d_off] = in.index.cols[s_off];
      out.index.valid[d_off] = in.index.valid[s_off];
    }
  }
  return out;
}

namespace {

// Generic pixel permutation: out(r, c) = in(map(r, c)).
template <typename Map>
View permute(const View& in, int out_h, int out_w, Map map) {
  View out;
  out.image = Image(in.image.channels, out_h, out_w);
  out.index.height = out_h;
  out.index.width = out_w;
  const size_t n = static_cast<size_t>(out_h) * out_w;
  out.index.rows.resize(n);
  out.index.cols.resize(n);
  out.index.valid.resize(n);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      const auto [sr, sc] = map(r, c);
      for (int k = 0; k < in.image.channels; ++k) out.image.at(k, r, c) = in.image.at(k, sr, sc);
      const size_t s = in.index.offset(sr, sc), d = out.index.offset(r, c);
      out.index.rows[d] = in.index.rows[s];
      out.index.cols[d] = in.index.cols[s];
      out.index.valid[d] = in.index.valid[s];
    }
  }
  return out;
}

}  // namespace

View flip_horizontal(const View& in) {
  const int W = in.image.width;
  return permute(in, in.image.height, W, [W](int r, int c) { return std::pair{r, W - 1 - c}; });
}

View flip_vertical(const View& in) {
  const int H = in.image.height;
  return permute(in, H, in.image.width, [H](int r, int c) { return std::pair{H - 1 - r, c}; });
}

// Counter-clockwise quarter turns.
View rotate90(const View& in, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  const int H = in.image.height, W = in.image.width;
  switch (k) {
    case 0: return in;
    case 1: return permute(in, W, H, [W](int r, int c) { return std::pair{c, W - 1 - r}; });
    case 2: return permute(in, H, W, [H, W](int r, int c) { return std::pair{H - 1 - r, W - 1 - c}; });
    default: return permute(in, W, H, [H](int r, int c) { return std::pair{H - 1 - c, r}; });
  }
}

void color_jitter(Image& img, double bf, double cf, double sf, double hue_shift) {
  const size_t plane = img.plane();
  // Brightness: all bands.
  for (float& v : img.data) v = clamp01(v * bf);
  // Contrast: blend towards the mean gray level; all bands.
  {
    const auto g = gray_plane(img);
    double m = 0.0;
    for (float v : g) m += v;
    m /= static_cast<double>(plane);
    for (float& v : img.data) v = clamp01((v - m) * cf + m);
  }
  if (img.channels < 3) return;
  // Saturation: blend RGB towards per-pixel gray.
  {
    const auto g = gray_plane(img);
    for (int c = 0; c < 3; ++c) {
      float* p = img.channel(c);
      for (size_t i = 0; i < plane; ++i) p[i] = clamp01((p[i] - g[i]) * sf + g[i]);
    }
  }
  if (hue_shift != 0.0) {
    float* r = img.channel(0);
    float* g = img.channel(1);
    float* b = img.channel(2);
    for (size_t i = 0; i < plane; ++i) {
      float h, s, v;
      rgb_to_hsv(r[i], g[i], b[i], h, s, v);
      hsv_to_rgb(h + static_cast<float>(hue_shift), s, v, r[i], g[i], b[i]);
    }
  }
}

void gaussian_blur(Image& img, double sigma, int kernel_size) {
  if (kernel_size < 1 || sigma <= 0) return;
  if (kernel_size % 2 == 0) ++kernel_size;
  const int half = kernel_size / 2;
  std::vector<float> k(static_cast<size_t>(kernel_size));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[static_cast<size_t>(i + half)] = static_cast<float>(v);
    sum += v;
  }
  for (float& v : k) v = static_cast<float>(v / sum);
  auto reflect = [](int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  const int H = img.height, W = img.width;
  std::vector<float> tmp(img.plane());
  for (int c = 0; c < img.channels; ++c) {
    float* p = img.channel(c);
    for (int r = 0; r < H; ++r) {
      for (int x = 0; x < W; ++x) {
        float acc = 0.f;
        for (int j = -half; j <= half; ++j) acc += k[static_cast<size_t>(j + half)] * p[static_cast<size_t>(r) * W + reflect(x + j, W)];
        tmp[static_cast<size_t>(r) * W + x] = acc;
      }
    }
    for (int r = 0; r < H; ++r) {
      for (int x = 0; x < W; ++x) {
        float acc = 0.f;
        for (int j = -half; j <= half; ++j) acc += k[static_cast<size_t>(j + half)] * tmp[static_cast<size_t>(reflect(r + j, H)) * W + x];
        p[static_cast<size_t>(r) * W + x] = acc;
      }
    }
  }
}

void add_gaussian_noise(Image& img, double stddev, Rng& rng) {
  if (stddev <= 0) return;
  for (float& v : img.data) v = clamp01(v + stddev * rng.normal());
}

void to_grayscale(Image& img) {
  if (img.channels < 3) return;
  const size_t plane = img.plane();
  const auto g = gray_plane(img);
  double mean_rgb = 0.0, mean_gray = 0.0;
  for (int c = 0; c < 3; ++c) {
    const float* p = img.channel(c);
    for (size_t i = 0; i < plane; ++i) mean_rgb += p[i];
  }
  mean_rgb /= 3.0 * static_cast<double>(plane);
  for (float v : g) mean_gray += v;
  mean_gray /= static_cast<double>(plane);
  for (int c = 0; c < 3; ++c) std::copy(g.begin(), g.end(), img.channel(c));
  // Non-RGB bands follow the mean shift of the RGB bands.
  const double shift = mean_gray - mean_rgb;
  for (int c = 3; c < img.channels; ++c) {
    float* p = img.channel(c);
    for (size_t i = 0; i < plane; ++i) p[i] = clamp01(p[i] + shift);
  }
}

View apply_view(const Image& sample, const IndexLabel& index, const AugmentationPipeline& pipeline, Rng& rng) {
  if (sample.height != index.height || sample.width != index.width) {
    throw InvalidArgument("image and index label are not spatially aligned");
  }
  View v{sample, index};
  for (const auto& op : pipeline.ops) {
    std::visit(Overloaded{
                   [&](const RandomCropResize& c) {
                     const CropWindow w = sample_crop(v.image.height, v.image.width, c, pipeline.output_size, rng);
                     if (w.top == 0 && w.left == 0 && w.height == v.image.height && w.width == v.image.width &&
                         w.height == pipeline.output_size && w.width == pipeline.output_size) {
                       return;
                     }
                     v = crop_resize(v, w, pipeline.output_size, pipeline.output_size);
                   },
                   [&](const RandomFlip& f) {
                     if (rng.bernoulli(f.p_horizontal)) v = flip_horizontal(v);
                     if (rng.bernoulli(f.p_vertical)) v = flip_vertical(v);
                   },
                   [&](const RandomRotate90& r) {
                     if (rng.bernoulli(r.probability)) v = rotate90(v, static_cast<int>(rng.below(4)));
                   },
                   [&](const ColorJitter& j) {
                     if (!rng.bernoulli(j.probability)) return;
                     const double bf = rng.uniform(std::max(0.0, 1 - j.brightness), 1 + j.brightness);
                     const double cf = rng.uniform(std::max(0.0, 1 - j.contrast), 1 + j.contrast);
                     const double sf = rng.uniform(std::max(0.0, 1 - j.saturation), 1 + j.saturation);
                     const double hf = rng.uniform(-j.hue, j.hue);
                     color_jitter(v.image, bf, cf, sf, hf);
                   },
                   [&](const GaussianBlur& b) {
                     if (!rng.bernoulli(b.probability)) return;
                     const double sigma = rng.uniform(b.sigma_min, b.sigma_max);
                     const int side = std::min(v.image.height, v.image.width);
                     const int k = std::max(3, static_cast<int>(std::lround(b.kernel_fraction * side)) | 1);
                     gaussian_blur(v.image, sigma, k);
                   },
                   [&](const GaussianNoise& n) {
                     if (!rng.bernoulli(n.probability)) return;
                     add_gaussian_noise(v.image, rng.uniform(n.stddev_min, n.stddev_max), rng);
                   },
                   [&](const RandomGrayscale& g) {
                     if (rng.bernoulli(g.probability)) to_grayscale(v.image);
                   },
               },
               op);
  }
  if (v.image.height != pipeline.output_size || v.image.width != pipeline.output_size) {
    // Pipelines without a crop op still emit the configured resolution.
    v = crop_resize(v, {0, 0, v.image.height, v.image.width}, pipeline.output_size, pipeline.output_size);
  }
  return v;
}

ViewPair make_view_pair(const Image& sample, uint64_t source_id, const AugmentationPipeline& t1,
                        const AugmentationPipeline& t2, Rng& rng) {
  if (t1.output_size != t2.output_size) throw InvalidArgument("both views need the same output resolution");
  const IndexLabel idx = build_index_label(sample.height, sample.width);
  ViewPair pair;
  pair.source_id = source_id;
  pair.view_a = apply_view(sample, idx, t1, rng);
  pair.view_b = apply_view(sample, idx, t2, rng);
  return pair;
}

}  // namespace glcnet
