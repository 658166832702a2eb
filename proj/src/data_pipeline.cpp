#include "glcnet/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "glcnet/error.hpp"
#include "glcnet/rng.hpp"
#include "glcnet/util.hpp"

namespace glcnet {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMaskSuffix = "_mask";

bool has_mask_suffix(const fs::path& p) {
  const std::string stem = p.stem().string();
  return stem.size() >= kMaskSuffix.size() &&
         stem.compare(stem.size() - kMaskSuffix.size(), kMaskSuffix.size(), kMaskSuffix) == 0;
}

std::string tile_stem(int row, int col) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%04d_c%04d", row, col);
  return buf;
}

std::string generic_rel(const fs::path& p, const fs::path& base) {
  return fs::relative(p, base).generic_string();
}

}  // namespace

std::vector<std::string> default_channel_names(int channels) {
  if (channels == 3) return {"R", "G", "B"};
  if (channels == 4) return {"R", "G", "B", "NIR"};
  std::vector<std::string> names;
  for (int c = 0; c < channels; ++c) names.push_back("band" + std::to_string(c + 1));
  return names;
}

void RasterScene::validate(int num_classes) const {
  if (pixels.channels < 1 || pixels.height < 1 || pixels.width < 1) {
    throw InvalidArgument("scene '" + name + "' has an empty raster");
  }
  if (mask) {
    if (mask->height != pixels.height || mask->width != pixels.width) {
      throw InvalidArgument("scene '" + name + "': mask is " + std::to_string(mask->height) + "x" +
                            std::to_string(mask->width) + " but pixels are " +
                            std::to_string(pixels.height) + "x" + std::to_string(pixels.width));
    }
    if (num_classes > 0) {
      for (int32_t v : mask->data) {
        if (v < 0 || v >= num_classes) {
          throw InvalidArgument("scene '" + name + "': class id " + std::to_string(v) + " outside [0," +
                                std::to_string(num_classes) + ")");
        }
      }
    }
  }
}

TileGrid tile_grid(int height, int width, int crop_size, int stride) {
  if (crop_size < 1) throw InvalidArgument("crop size must be >= 1");
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  if (height < crop_size || width < crop_size) {
    throw InvalidArgument("scene of " + std::to_string(height) + "x" + std::to_string(width) +
                          " pixels is smaller than the " + std::to_string(crop_size) + "x" +
                          std::to_string(crop_size) + " crop");
  }
  return {(height - crop_size) / stride + 1, (width - crop_size) / stride + 1};
}

std::vector<Tile> tile_raster(const RasterScene& scene, int crop_size, int stride) {
  const TileGrid grid = tile_grid(scene.height(), scene.width(), crop_size, stride);
  const int C = scene.pixels.channels;
  std::vector<Tile> tiles;
  tiles.reserve(static_cast<size_t>(grid.count()));
  for (int gr = 0; gr < grid.rows; ++gr) {
    for (int gc = 0; gc < grid.cols; ++gc) {
      Tile t;
      t.grid_row = gr;
      t.grid_col = gc;
      t.top = gr * stride;
      t.left = gc * stride;
      t.pixels = Image(C, crop_size, crop_size);
      for (int c = 0; c < C; ++c) {
        for (int r = 0; r < crop_size; ++r) {
          const float* src = scene.pixels.channel(c) + static_cast<size_t>(t.top + r) * scene.width() + t.left;
          std::copy(src, src + crop_size, t.pixels.channel(c) + static_cast<size_t>(r) * crop_size);
        }
      }
      if (scene.mask) {
        LabelMap m(crop_size, crop_size);
        for (int r = 0; r < crop_size; ++r) {
          for (int col = 0; col < crop_size; ++col) m.at(r, col) = scene.mask->at(t.top + r, t.left + col);
        }
        t.mask = std::move(m);
      }
      tiles.push_back(std::move(t));
    }
  }
  return tiles;
}

Image stitch_tiles(const std::vector<Tile>& tiles, const TileGrid& grid, int crop_size) {
  if (tiles.empty() || static_cast<int>(tiles.size()) != grid.count()) {
    throw InvalidArgument("tile count does not match grid");
  }
  const int C = tiles.front().pixels.channels;
  Image out(C, grid.rows * crop_size, grid.cols * crop_size);
  for (const Tile& t : tiles) {
    for (int c = 0; c < C; ++c) {
      for (int r = 0; r < crop_size; ++r) {
        const float* src = t.pixels.channel(c) + static_cast<size_t>(r) * crop_size;
        std::copy(src, src + crop_size,
                  out.channel(c) + static_cast<size_t>(t.grid_row * crop_size + r) * out.width +
                      t.grid_col * crop_size);
      }
    }
  }
  return out;
}

std::vector<fs::path> list_scene_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path()) && !has_mask_suffix(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

RasterScene load_scene(const fs::path& path) {
  RasterScene scene;
  scene.name = path.stem().string();
  scene.pixels = read_image(path);
  scene.channel_names = default_channel_names(scene.pixels.channels);
  for (const char* ext : {".png", ".tif", ".tiff", ".PNG", ".TIF", ".TIFF"}) {
    const fs::path mask_path = path.parent_path() / (scene.name + std::string(kMaskSuffix) + ext);
    if (fs::exists(mask_path)) {
      scene.mask = read_label_map(mask_path);
      break;
    }
  }
  scene.validate();
  return scene;
}

TilingSummary tile_directory(const fs::path& scene_dir, const fs::path& tile_dir, int crop_size,
                             int stride, int threads) {
  const auto files = list_scene_files(scene_dir);
  if (files.empty()) throw InvalidArgument("no scene images found in " + scene_dir.string());
  fs::create_directories(tile_dir);
  std::vector<TilingSummary> per_scene(files.size());
  parallel_for(files.size(), threads, [&](size_t i) {
    const RasterScene scene = load_scene(files[i]);
    const auto tiles = tile_raster(scene, crop_size, stride);
    const fs::path out = tile_dir / scene.name;
    fs::create_directories(out);
    const bool tiff = scene.pixels.channels > 4;
    for (const Tile& t : tiles) {
      const std::string stem = tile_stem(t.grid_row, t.grid_col);
      write_image(out / (stem + (tiff ? ".tif" : ".png")), t.pixels);
      if (t.mask) {
        write_label_map(out / (stem + std::string(kMaskSuffix) + ".png"), *t.mask);
        ++per_scene[i].masked_tiles;
      }
    }
    per_scene[i].scenes = 1;
    per_scene[i].tiles = tiles.size();
  });
  TilingSummary total;
  for (const auto& s : per_scene) {
    total.scenes += s.scenes;
    total.tiles += s.tiles;
    total.masked_tiles += s.masked_tiles;
  }
  return total;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::kPretrain: return "pretrain";
    case Split::kFinetune: return "finetune";
    case Split::kTest: return "test";
  }
  return "?";
}

std::string DatasetManifest::serialize() const {
  std::string out;
  for (const auto& e : entries) {
    out += e.tile_path;
    out += '\t';
    out += e.mask_path ? *e.mask_path : "-";
    out += '\n';
  }
  return out;
}

DatasetManifest DatasetManifest::parse(const std::string& text, Split split) {
  DatasetManifest m;
  m.split = split;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("manifest line " + std::to_string(lineno) + " lacks a TAB separator");
    }
    ManifestEntry e;
    e.tile_path = line.substr(0, tab);
    const std::string mask = line.substr(tab + 1);
    if (mask != "-") e.mask_path = mask;
    m.entries.push_back(std::move(e));
  }
  return m;
}

size_t label_subset_size(size_t pretrain_count, double label_fraction) {
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) {
    throw InvalidArgument("label fraction must lie in (0, 1], got " + format_double(label_fraction));
  }
  const auto n = static_cast<size_t>(std::floor(label_fraction * static_cast<double>(pretrain_count) + 1e-9));
  return std::clamp<size_t>(n, pretrain_count ? 1 : 0, pretrain_count);
}

std::string ManifestSet::summary() const {
  std::ostringstream s;
  s << "crop_size: " << pretrain.crop_size << "\n"
    << "label_fraction: " << format_double(finetune.label_fraction) << "\n"
    << "seed: " << seed << "\n"
    << "pretrain: " << pretrain.entries.size() << "\n"
    << "finetune: " << finetune.entries.size() << "\n"
    << "test: " << test.entries.size() << "\n";
  return s.str();
}

DatasetManifest select_label_subset(const DatasetManifest& pretrain, double label_fraction, uint64_t seed) {
  std::vector<ManifestEntry> labeled;
  for (const auto& e : pretrain.entries) {
    if (e.mask_path) labeled.push_back(e);
  }
  const size_t want = label_subset_size(pretrain.entries.size(), label_fraction);
  if (labeled.size() < want) {
    throw InvalidArgument("label fraction needs " + std::to_string(want) + " labeled tiles but only " +
                          std::to_string(labeled.size()) + " pretrain tiles have masks");
  }
  Rng rng(Rng::derive(seed, "split.finetune"));
  rng.shuffle(labeled);
  labeled.resize(want);
  std::sort(labeled.begin(), labeled.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.tile_path < b.tile_path; });
  DatasetManifest out;
  out.split = Split::kFinetune;
  out.crop_size = pretrain.crop_size;
  out.label_fraction = label_fraction;
  out.entries = std::move(labeled);
  return out;
}

ManifestSet build_manifest(const fs::path& tile_dir, const SplitSpec& splits, double label_fraction,
                           uint64_t seed) {
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) {
    throw InvalidArgument("label fraction must lie in (0, 1], got " + format_double(label_fraction));
  }
  if (splits.test_fraction < 0.0 || splits.test_fraction >= 1.0) {
    throw InvalidArgument("test fraction must lie in [0, 1)");
  }
  if (!fs::is_directory(tile_dir)) throw IoError("tile directory does not exist: " + tile_dir.string());

  // scene name -> sorted tile entries
  std::map<std::string, std::vector<ManifestEntry>> scenes;
  int crop = 0;
  for (const auto& sd : fs::directory_iterator(tile_dir)) {
    if (!sd.is_directory()) continue;
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(sd.path())) {
      if (f.is_regular_file() && is_image_file(f.path()) && !has_mask_suffix(f.path())) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    auto& list = scenes[sd.path().filename().string()];
    for (const auto& f : files) {
      ManifestEntry e;
      e.tile_path = generic_rel(f, tile_dir);
      const fs::path mask = f.parent_path() / (f.stem().string() + std::string(kMaskSuffix) + ".png");
      if (fs::exists(mask)) e.mask_path = generic_rel(mask, tile_dir);
      if (crop == 0) crop = read_image(f).height;
      list.push_back(std::move(e));
    }
    if (list.empty()) scenes.erase(sd.path().filename().string());
  }
  if (scenes.empty()) throw InvalidArgument("tile directory is empty: " + tile_dir.string());

  std::vector<std::string> names;
  for (const auto& [name, _] : scenes) names.push_back(name);

  std::set<std::string> test_names;
  if (!splits.test_scenes.empty()) {
    for (const auto& n : splits.test_scenes) {
      if (!scenes.count(n)) throw InvalidArgument("unknown test scene '" + n + "'");
      test_names.insert(n);
    }
  } else if (splits.test_fraction > 0.0) {
    std::vector<std::string> order = names;
    Rng rng(Rng::derive(seed, "split.scenes"));
    rng.shuffle(order);
    auto k = static_cast<size_t>(std::llround(splits.test_fraction * static_cast<double>(order.size())));
    k = std::clamp<size_t>(k, 1, order.size() - 1);
    test_names.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  }
  if (test_names.size() == names.size()) throw InvalidArgument("every scene was assigned to the test split");

  ManifestSet set;
  set.seed = seed;
  for (auto* m : {&set.pretrain, &set.finetune, &set.test}) {
    m->crop_size = crop;
    m->label_fraction = label_fraction;
  }
  set.pretrain.split = Split::kPretrain;
  set.finetune.split = Split::kFinetune;
  set.test.split = Split::kTest;

  for (const auto& name : names) {
    auto& dst = test_names.count(name) ? set.test.entries : set.pretrain.entries;
    dst.insert(dst.end(), scenes[name].begin(), scenes[name].end());
  }

  set.finetune = select_label_subset(set.pretrain, label_fraction, seed);

  for (const auto& e : set.test.entries) {
    if (!e.mask_path) throw InvalidArgument("test tile without mask: " + e.tile_path);
  }
  if (splits.test_limit > 0 && set.test.entries.size() > splits.test_limit) {
    Rng rng(Rng::derive(seed, "split.test"));
    rng.shuffle(set.test.entries);
    set.test.entries.resize(splits.test_limit);
    std::sort(set.test.entries.begin(), set.test.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.tile_path < b.tile_path; });
  }
  return set;
}

void write_manifest_set(const ManifestSet& set, const fs::path& dir) {
  write_file_atomic(dir / "pretrain.txt", set.pretrain.serialize());
  write_file_atomic(dir / "finetune.txt", set.finetune.serialize());
  write_file_atomic(dir / "test.txt", set.test.serialize());
  write_file_atomic(dir / "split_summary.txt", set.summary());
}

DatasetManifest read_manifest(const fs::path& file, Split split) {
  return DatasetManifest::parse(read_text_file(file), split);
}

fs::path resolve_entry(const fs::path& manifest_dir, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : manifest_dir / p;
}

}  // namespace glcnet
