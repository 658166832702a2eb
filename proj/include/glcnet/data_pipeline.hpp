#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glcnet/image.hpp"

namespace glcnet {

// Source imagery with an optional class mask of identical spatial size.
struct RasterScene {
  std::string name;
  Image pixels;
  std::vector<std::string> channel_names;
  std::optional<LabelMap> mask;
  std::optional<double> nodata_value;

  int height() const { return pixels.height; }
  int width() const { return pixels.width; }
  void validate(int num_classes = 0) const;
};

std::vector<std::string> default_channel_names(int channels);

struct Tile {
  int grid_row = 0;
  int grid_col = 0;
  int top = 0;
  int left = 0;
  Image pixels;
  std::optional<LabelMap> mask;
};

struct TileGrid {
  int rows = 0;
  int cols = 0;
  int count() const { return rows * cols; }
};

// Grid dimensions for crop/stride tiling; remainder pixels are dropped.
TileGrid tile_grid(int height, int width, int crop_size, int stride);

// Tiles in row-major grid order. Throws InvalidArgument when the scene is
// smaller than the crop.
std::vector<Tile> tile_raster(const RasterScene& scene, int crop_size, int stride);

// Inverse of tile_raster for stride == crop: the cropped-to-grid image.
Image stitch_tiles(const std::vector<Tile>& tiles, const TileGrid& grid, int crop_size);

// Scene discovery: every image file not carrying the `_mask` suffix is a scene;
// `<stem>_mask.<ext>` next to it is its mask.
std::vector<std::filesystem::path> list_scene_files(const std::filesystem::path& dir);
RasterScene load_scene(const std::filesystem::path& path);

struct TilingSummary {
  size_t scenes = 0;
  size_t tiles = 0;
  size_t masked_tiles = 0;
};

// Tiles every scene of `scene_dir` into `tile_dir/<scene>/rRRRR_cCCCC.png`
// (plus `_mask.png`). Scenes are processed on `threads` workers; the output is
// independent of the worker count.
TilingSummary tile_directory(const std::filesystem::path& scene_dir,
                             const std::filesystem::path& tile_dir, int crop_size, int stride,
                             int threads = 1);

enum class Split { kPretrain, kFinetune, kTest };
std::string split_name(Split s);

struct ManifestEntry {
  std::string tile_path;                 // relative to the manifest directory, '/' separated
  std::optional<std::string> mask_path;  // same convention

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  Split split = Split::kPretrain;
  int crop_size = 0;
  double label_fraction = 1.0;
  std::vector<ManifestEntry> entries;

  // One record per line: `tile_path<TAB>mask_path_or_dash`.
  std::string serialize() const;
  static DatasetManifest parse(const std::string& text, Split split);
};

struct SplitSpec {
  double test_fraction = 0.0;             // fraction of scenes held out for testing
  std::vector<std::string> test_scenes;   // explicit held-out scene names (override fraction)
  size_t test_limit = 0;                  // 0 keeps every test tile
};

struct ManifestSet {
  DatasetManifest pretrain;
  DatasetManifest finetune;
  DatasetManifest test;
  uint64_t seed = 0;

  std::string summary() const;
};

// Number of labeled tiles drawn for a label fraction (floor, at least one).
size_t label_subset_size(size_t pretrain_count, double label_fraction);

// Seeded draw of label_subset_size(...) masked tiles from the pretrain split.
DatasetManifest select_label_subset(const DatasetManifest& pretrain, double label_fraction, uint64_t seed);

ManifestSet build_manifest(const std::filesystem::path& tile_dir, const SplitSpec& splits,
                           double label_fraction, uint64_t seed);

// Writes pretrain.txt, finetune.txt, test.txt and split_summary.txt.
void write_manifest_set(const ManifestSet& set, const std::filesystem::path& dir);
DatasetManifest read_manifest(const std::filesystem::path& file, Split split);

// Resolves a manifest entry path against the manifest's directory.
std::filesystem::path resolve_entry(const std::filesystem::path& manifest_dir, const std::string& rel);

// ---------------------------------------------------------------------------
// Synthetic scenes

struct ClassTexture {
  std::array<float, 4> color{0.5f, 0.5f, 0.5f, 0.5f};
  float stripe_amplitude = 0.1f;
  float stripe_frequency = 0.1f;  // cycles per pixel
  float stripe_orientation = 0.f;  // radians
  float noise = 0.05f;
};

struct SyntheticSceneSpec {
  int num_classes = 4;
  int scene_size = 512;
  int num_scenes = 1;
  int bands = 3;
  int cell_size = 48;                  // mean side of a class region, pixels
  std::vector<double> class_weights;   // empty -> uniform
  std::vector<ClassTexture> textures;  // empty -> derived from seed
  float illumination_jitter = 0.15f;   // per-scene gain / color cast amplitude
  double color_spread = 0.5;           // class base colors drawn from 0.5 +- spread/2
  uint64_t seed = 0;

  void validate() const;
};

std::vector<ClassTexture> derive_textures(const SyntheticSceneSpec& spec);

std::vector<RasterScene> generate_synthetic_dataset(const SyntheticSceneSpec& spec, int threads = 1);

// Per-scene class pixel proportions, CSV text.
std::string class_proportion_summary(const std::vector<RasterScene>& scenes, int num_classes);

// Writes scene_NNN.png / scene_NNN_mask.png and class_proportions.csv.
void write_synthetic_dataset(const SyntheticSceneSpec& spec, const std::filesystem::path& out_dir,
                             int threads = 1);

}  // namespace glcnet
