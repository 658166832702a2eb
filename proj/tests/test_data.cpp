#include <set>

#include "doctest.h"
#include "glcnet/augmentation.hpp"
#include "glcnet/data_pipeline.hpp"
#include "glcnet/error.hpp"
#include "glcnet/util.hpp"
#include "oracles.hpp"

using namespace glcnet;
namespace fs = std::filesystem;

namespace {

RasterScene ramp_scene(int h, int w, int bands) {
  RasterScene s;
  s.name = "ramp";
  s.pixels = Image(bands, h, w);
  s.mask = LabelMap(h, w);
  for (int c = 0; c < bands; ++c)
    for (int r = 0; r < h; ++r)
      for (int q = 0; q < w; ++q) s.pixels.at(c, r, q) = static_cast<float>((r * w + q + c) % 251) / 250.f;
  for (int r = 0; r < h; ++r)
    for (int q = 0; q < w; ++q) s.mask->at(r, q) = (r / 8 + q / 8) % 3;
  s.channel_names = default_channel_names(bands);
  return s;
}

// Image whose pixel value encodes its own coordinates.
Image coordinate_image(int n) {
  Image img(2, n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      img.at(0, r, c) = static_cast<float>(r);
      img.at(1, r, c) = static_cast<float>(c);
    }
  return img;
}

}  // namespace

TEST_CASE("tile grid counts") {
  CHECK(tile_grid(6000, 6000, 256, 249).count() == 576);
  CHECK(tile_grid(6000, 6000, 256, 256).count() == 23 * 23);
  CHECK(tile_grid(1024, 1024, 64, 64).count() == 256);
  CHECK(tile_grid(100, 70, 64, 16).rows == 3);
  CHECK(tile_grid(100, 70, 64, 16).cols == 1);
  CHECK_THROWS_AS(tile_grid(32, 32, 64, 64), InvalidArgument);
  CHECK_THROWS_AS(tile_grid(64, 64, 64, 0), InvalidArgument);
}

TEST_CASE("tiles cover the scene and stitch back") {
  const auto scene = ramp_scene(80, 96, 3);
  const auto tiles = tile_raster(scene, 16, 16);
  REQUIRE(tiles.size() == 30);
  for (const auto& t : tiles) {
    REQUIRE(t.mask);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) {
        CHECK(t.pixels.at(1, r, c) == scene.pixels.at(1, t.top + r, t.left + c));
        CHECK(t.mask->at(r, c) == scene.mask->at(t.top + r, t.left + c));
      }
  }
  CHECK(stitch_tiles(tiles, tile_grid(80, 96, 16, 16), 16) == scene.pixels);
}

TEST_CASE("label subset size") {
  CHECK(label_subset_size(13824, 0.01) == 138);
  CHECK(label_subset_size(2048, 0.01) == 20);
  CHECK(label_subset_size(50, 0.01) == 1);
  CHECK(label_subset_size(10, 1.0) == 10);
  CHECK_THROWS_AS(label_subset_size(10, 0.0), InvalidArgument);
  CHECK_THROWS_AS(label_subset_size(10, 1.5), InvalidArgument);
}

TEST_CASE("manifest text round trip") {
  DatasetManifest m;
  m.split = Split::kTest;
  m.entries = {{"a/r0000_c0000.png", "a/r0000_c0000_mask.png"}, {"b/r0001_c0002.png", std::nullopt}};
  const auto back = DatasetManifest::parse(m.serialize(), Split::kTest);
  CHECK(back.entries == m.entries);
}

TEST_CASE("tiling a directory and splitting by scene") {
  const auto dir = oracle::scratch("split");
  SyntheticSceneSpec spec;
  spec.scene_size = 128;
  spec.num_scenes = 4;
  spec.seed = 2;
  write_synthetic_dataset(spec, dir / "scenes");
  const auto summary = tile_directory(dir / "scenes", dir / "tiles", 32, 32);
  CHECK(summary.scenes == 4);
  CHECK(summary.tiles == 64);
  CHECK(summary.masked_tiles == 64);

  SplitSpec split;
  split.test_scenes = {"scene_003"};
  const auto set = build_manifest(dir / "tiles", split, 0.1, 9);
  CHECK(set.pretrain.entries.size() == 48);
  CHECK(set.test.entries.size() == 16);
  CHECK(set.finetune.entries.size() == 4);
  std::set<std::string> pre;
  for (const auto& e : set.pretrain.entries) {
    pre.insert(e.tile_path);
    CHECK(e.tile_path.rfind("scene_003", 0) != 0);
  }
  for (const auto& e : set.finetune.entries) CHECK(pre.count(e.tile_path) == 1);
  for (const auto& e : set.test.entries) CHECK(e.tile_path.rfind("scene_003", 0) == 0);

  const auto again = build_manifest(dir / "tiles", split, 0.1, 9);
  CHECK(again.finetune.entries == set.finetune.entries);
  CHECK(select_label_subset(set.pretrain, 0.1, 9).entries == set.finetune.entries);

  write_manifest_set(set, dir / "tiles");
  CHECK(read_manifest(dir / "tiles" / "pretrain.txt", Split::kPretrain).entries == set.pretrain.entries);
  const auto first = resolve_entry(dir / "tiles", set.test.entries[0].tile_path);
  CHECK(fs::exists(first));
  CHECK(read_image(first).width == 32);

  SplitSpec frac;
  frac.test_fraction = 0.5;
  frac.test_limit = 10;
  const auto f = build_manifest(dir / "tiles", frac, 0.1, 1);
  CHECK(f.test.entries.size() == 10);
  CHECK(f.pretrain.entries.size() == 32);
}

TEST_CASE("synthetic scenes are deterministic") {
  SyntheticSceneSpec spec;
  spec.scene_size = 64;
  spec.num_scenes = 2;
  spec.seed = 4;
  const auto a = generate_synthetic_dataset(spec);
  const auto b = generate_synthetic_dataset(spec, 2);
  REQUIRE(a.size() == 2);
  CHECK(a[0].pixels == b[0].pixels);
  CHECK(*a[1].mask == *b[1].mask);
  CHECK_FALSE(a[0].pixels == a[1].pixels);
  std::set<int> seen(a[0].mask->data.begin(), a[0].mask->data.end());
  for (int v : seen) CHECK((v >= 0 && v < 4));
}

TEST_CASE("image files round trip at 8 bits") {
  const auto dir = oracle::scratch("io");
  const auto scene = ramp_scene(10, 12, 4);
  write_image(dir / "x.png", scene.pixels);
  CHECK(read_image(dir / "x.png") == quantized(scene.pixels));
  const auto five = ramp_scene(6, 7, 5);
  write_image(dir / "x.tif", five.pixels);
  CHECK(read_image(dir / "x.tif") == quantized(five.pixels));
  write_label_map(dir / "m.png", *scene.mask);
  CHECK(read_label_map(dir / "m.png") == *scene.mask);
  CHECK_THROWS_AS(read_image(dir / "missing.png"), IoError);
}

TEST_CASE("spatial transforms carry the index label with the pixels") {
  const int n = 16;
  const Image img = coordinate_image(n);
  View v{img, build_index_label(n, n)};
  auto check = [](const View& out) {
    for (int r = 0; r < out.image.height; ++r)
      for (int c = 0; c < out.image.width; ++c) {
        REQUIRE(out.index.is_valid(r, c));
        CHECK(out.image.at(0, r, c) == static_cast<float>(out.index.row(r, c)));
        CHECK(out.image.at(1, r, c) == static_cast<float>(out.index.col(r, c)));
      }
  };
  check(flip_horizontal(v));
  check(flip_vertical(v));
  for (int q = 0; q < 4; ++q) check(rotate90(v, q));
  check(crop_resize(v, CropWindow{3, 5, 8, 8}, 8, 8));
  CHECK(rotate90(v, 4).index == v.index);
  CHECK(flip_horizontal(flip_horizontal(v)).image == v.image);

  const auto up = crop_resize(v, CropWindow{0, 0, 8, 8}, 16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      CHECK(up.index.row(r, c) == r / 2);
      CHECK(up.index.col(r, c) == c / 2);
    }
}

TEST_CASE("view pairs are reproducible per seed") {
  const Image img = coordinate_image(32);
  const auto t1 = AugmentationPipeline::view_a(16);
  const auto t2 = AugmentationPipeline::view_b(16);
  Rng r1(8), r2(8), r3(9);
  const auto a = make_view_pair(img, 0, t1, t2, r1);
  const auto b = make_view_pair(img, 0, t1, t2, r2);
  const auto c = make_view_pair(img, 0, t1, t2, r3);
  CHECK(a.view_b.image == b.view_b.image);
  CHECK(a.view_b.index == b.view_b.index);
  CHECK_FALSE((a.view_a.index == c.view_a.index && a.view_b.index == c.view_b.index));
  CHECK(a.view_a.image.width == 16);
  CHECK(t2.photometric_only() == false);
}

TEST_CASE("photometric transforms keep values bounded") {
  Image img(3, 8, 8, 0.5f);
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i % 17) / 16.f;
  color_jitter(img, 1.8, 0.2, 1.9, 0.3);
  gaussian_blur(img, 1.5, 5);
  Rng rng(1);
  add_gaussian_noise(img, 0.1, rng);
  for (float v : img.data) CHECK((v >= 0.f && v <= 1.f));
  to_grayscale(img);
  CHECK(img.at(0, 3, 3) == img.at(2, 3, 3));
}
