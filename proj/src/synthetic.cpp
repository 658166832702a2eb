#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "glcnet/data_pipeline.hpp"
#include "glcnet/error.hpp"
#include "glcnet/rng.hpp"
#include "glcnet/util.hpp"

namespace glcnet {

namespace fs = std::filesystem;

namespace {

// Smooth value noise on a lattice with spacing `cell`, in [-1, 1].
class ValueNoise {
 public:
  ValueNoise(int size, int cell, Rng& rng) : cell_(std::max(cell, 1)), n_(size / cell_ + 2) {
    lattice_.resize(static_cast<size_t>(n_) * n_);
    for (double& v : lattice_) v = rng.uniform(-1.0, 1.0);
  }

  double operator()(double r, double c) const {
    const double y = r / cell_, x = c / cell_;
    const int y0 = static_cast<int>(y), x0 = static_cast<int>(x);
    const double fy = smooth(y - y0), fx = smooth(x - x0);
    auto at = [&](int yy, int xx) { return lattice_[static_cast<size_t>(std::min(yy, n_ - 1)) * n_ + std::min(xx, n_ - 1)]; };
    const double top = at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx;
    const double bot = at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx;
    return top * (1 - fy) + bot * fy;
  }

 private:
  static double smooth(double t) { return t * t * (3 - 2 * t); }
  int cell_;
  int n_;
  std::vector<double> lattice_;
};

int sample_class(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

RasterScene generate_scene(const SyntheticSceneSpec& spec, const std::vector<ClassTexture>& textures,
                           int index) {
  Rng rng(Rng::derive(spec.seed, "synthetic.scene", static_cast<uint64_t>(index)));
  const int S = spec.scene_size;
  const int cell = std::max(spec.cell_size, 4);

  std::vector<double> cdf(static_cast<size_t>(spec.num_classes));
  {
    double acc = 0.0, total = 0.0;
    for (int k = 0; k < spec.num_classes; ++k) total += spec.class_weights.empty() ? 1.0 : spec.class_weights[k];
    for (int k = 0; k < spec.num_classes; ++k) {
      acc += (spec.class_weights.empty() ? 1.0 : spec.class_weights[k]) / total;
      cdf[k] = acc;
    }
  }

  // Jittered-grid Voronoi seeds, one per cell, each with a class label.
  const int g = (S + cell - 1) / cell;
  struct Site {
    double r, c;
    int cls;
  };
  std::vector<Site> sites(static_cast<size_t>(g) * g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      Site& s = sites[static_cast<size_t>(i) * g + j];
      s.r = (i + rng.uniform()) * cell;
      s.c = (j + rng.uniform()) * cell;
      s.cls = sample_class(cdf, rng.uniform());
    }
  }
  ValueNoise warp_r(S, cell, rng), warp_c(S, cell, rng);
  const double warp_amp = 0.35 * cell;

  RasterScene scene;
  char name[32];
  std::snprintf(name, sizeof name, "scene_%03d", index);
  scene.name = name;
  scene.pixels = Image(spec.bands, S, S);
  scene.channel_names = default_channel_names(spec.bands);
  scene.mask = LabelMap(S, S);

  for (int r = 0; r < S; ++r) {
    for (int c = 0; c < S; ++c) {
      const double wr = r + warp_amp * warp_r(r, c);
      const double wc = c + warp_amp * warp_c(r, c);
      const int gi = std::clamp(static_cast<int>(wr / cell), 0, g - 1);
      const int gj = std::clamp(static_cast<int>(wc / cell), 0, g - 1);
      double best = 1e300;
      int cls = 0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          const int ii = gi + di, jj = gj + dj;
          if (ii < 0 || jj < 0 || ii >= g || jj >= g) continue;
          const Site& s = sites[static_cast<size_t>(ii) * g + jj];
          const double d = (s.r - wr) * (s.r - wr) + (s.c - wc) * (s.c - wc);
          if (d < best) {
            best = d;
            cls = s.cls;
          }
        }
      }
      scene.mask->at(r, c) = cls;
    }
  }

  // Per-scene illumination: global gain plus a per-band cast.
  const double j = spec.illumination_jitter;
  const double gain = 1.0 + rng.uniform(-j, j);
  std::vector<double> cast(static_cast<size_t>(spec.bands));
  for (double& v : cast) v = rng.uniform(-j, j) * 0.5;
  std::vector<double> phase(static_cast<size_t>(spec.num_classes));
  for (double& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);

  for (int r = 0; r < S; ++r) {
    for (int c = 0; c < S; ++c) {
      const ClassTexture& t = textures[static_cast<size_t>(scene.mask->at(r, c))];
      const int k = scene.mask->at(r, c);
      const double u = c * std::cos(t.stripe_orientation) + r * std::sin(t.stripe_orientation);
      const double stripe = t.stripe_amplitude * std::sin(2.0 * std::numbers::pi * t.stripe_frequency * u + phase[k]);
      const double grain = rng.normal() * t.noise;
      for (int b = 0; b < spec.bands; ++b) {
        const double v = gain * (t.color[static_cast<size_t>(std::min(b, 3))] + stripe + grain) + cast[b];
        scene.pixels.at(b, r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return scene;
}

}  // namespace

void SyntheticSceneSpec::validate() const {
  if (num_classes < 2) throw InvalidArgument("synthetic spec needs at least 2 classes, got " + std::to_string(num_classes));
  if (scene_size < 1) throw InvalidArgument("scene size must be positive");
  if (num_scenes < 1) throw InvalidArgument("scene count must be positive");
  if (bands < 1) throw InvalidArgument("band count must be positive");
  if (!class_weights.empty()) {
    if (class_weights.size() != static_cast<size_t>(num_classes)) throw InvalidArgument("class weight count != num_classes");
    for (double w : class_weights) {
      if (!(w >= 0.0)) throw InvalidArgument("class weights must be non-negative");
    }
  }
  if (!(color_spread >= 0.0 && color_spread <= 1.0)) throw InvalidArgument("color spread must be in [0, 1]");
  if (!textures.empty() && textures.size() != static_cast<size_t>(num_classes)) {
    throw InvalidArgument("texture count != num_classes");
  }
}

std::vector<ClassTexture> derive_textures(const SyntheticSceneSpec& spec) {
  if (!spec.textures.empty()) return spec.textures;
  Rng rng(Rng::derive(spec.seed, "synthetic.textures"));
  std::vector<ClassTexture> out(static_cast<size_t>(spec.num_classes));
  for (auto& t : out) {
    for (float& c : t.color) c = static_cast<float>(rng.uniform(0.5 - spec.color_spread / 2, 0.5 + spec.color_spread / 2));
    t.stripe_amplitude = static_cast<float>(rng.uniform(0.04, 0.16));
    t.stripe_frequency = static_cast<float>(rng.uniform(0.04, 0.3));
    t.stripe_orientation = static_cast<float>(rng.uniform(0.0, std::numbers::pi));
    t.noise = static_cast<float>(rng.uniform(0.02, 0.07));
  }
  return out;
}

std::vector<RasterScene> generate_synthetic_dataset(const SyntheticSceneSpec& spec, int threads) {
  spec.validate();
  const auto textures = derive_textures(spec);
  std::vector<RasterScene> scenes(static_cast<size_t>(spec.num_scenes));
  parallel_for(scenes.size(), threads, [&](size_t i) { scenes[i] = generate_scene(spec, textures, static_cast<int>(i)); });
  return scenes;
}

std::string class_proportion_summary(const std::vector<RasterScene>& scenes, int num_classes) {
  std::ostringstream s;
  s << "scene";
  for (int k = 0; k < num_classes; ++k) s << ",class_" << k;
  s << "\n";
  std::vector<double> total(static_cast<size_t>(num_classes), 0.0);
  double total_px = 0.0;
  for (const auto& scene : scenes) {
    std::vector<double> counts(static_cast<size_t>(num_classes), 0.0);
    if (scene.mask) {
      for (int32_t v : scene.mask->data) counts[static_cast<size_t>(v)] += 1.0;
    }
    const double px = static_cast<double>(scene.mask ? scene.mask->data.size() : 0);
    s << scene.name;
    for (int k = 0; k < num_classes; ++k) {
      s << "," << format_double(px > 0 ? counts[k] / px : 0.0);
      total[k] += counts[k];
    }
    total_px += px;
    s << "\n";
  }
  s << "all";
  for (int k = 0; k < num_classes; ++k) s << "," << format_double(total_px > 0 ? total[k] / total_px : 0.0);
  s << "\n";
  return s.str();
}

void write_synthetic_dataset(const SyntheticSceneSpec& spec, const fs::path& out_dir, int threads) {
  const auto scenes = generate_synthetic_dataset(spec, threads);
  fs::create_directories(out_dir);
  parallel_for(scenes.size(), threads, [&](size_t i) {
    const auto& s = scenes[i];
    write_image(out_dir / (s.name + (spec.bands > 4 ? ".tif" : ".png")), s.pixels);
    write_label_map(out_dir / (s.name + "_mask.png"), *s.mask);
  });
  write_file_atomic(out_dir / "class_proportions.csv", class_proportion_summary(scenes, spec.num_classes));
}

}  // namespace glcnet
