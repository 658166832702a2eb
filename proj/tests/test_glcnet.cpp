#include <cmath>

#include "doctest.h"
#include "glcnet/error.hpp"
#include "glcnet/glcnet.hpp"
#include "oracles.hpp"

using namespace glcnet;

namespace {

Tensor<double> random_tensor(Rng& rng, std::vector<int> shape) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) v = rng.normal();
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("style vector of constant channels has zero variance") {
  Tensor<float> f({2, 3, 4, 5});
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 20; ++i) f[(n * 3 + c) * 20 + i] = static_cast<float>(n + 0.5 * c);
  const auto s = extract_style(f);
  REQUIRE(s.dim(1) == 6);
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c) {
      CHECK(s[n * 6 + c] == doctest::Approx(n + 0.5 * c));
      CHECK(s[n * 6 + 3 + c] == 0.0f);
    }
  CHECK(extract_style(f, false).dim(1) == 3);
  const auto std_mode = extract_style(f, true, StyleMode::kStd);
  CHECK(std_mode[3] == doctest::Approx(std::sqrt(kStyleStdEps)));
}

TEST_CASE("style vector of a single map") {
  const std::vector<double> map{1, 3, 1, 3, 0, 0, 4, 4};
  const auto s = extract_style(map, 2, 2, 2);
  CHECK(s == std::vector<double>{2, 2, 1, 4});
  CHECK_THROWS_AS(extract_style(map, 3, 2, 2), InvalidArgument);
}

TEST_CASE("style backward is the adjoint of the forward") {
  Rng rng(2);
  for (auto mode : {StyleMode::kVariance, StyleMode::kStd}) {
    for (bool use_style : {true, false}) {
      const auto x = random_tensor(rng, {2, 3, 3, 4});
      const auto w = random_tensor(rng, {2, use_style ? 6 : 3});
      const auto dx = extract_style_backward(x, w, use_style, mode);
      const double h = 1e-6;
      for (size_t i = 0; i < x.size(); i += 5) {
        auto p = x, m = x;
        p[i] += h;
        m[i] -= h;
        const double fd =
            (dot(extract_style(p, use_style, mode), w) - dot(extract_style(m, use_style, mode), w)) / (2 * h);
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("region centers on an identity index") {
  const auto idx = build_index_label(10, 10);
  double r, c;
  REQUIRE(region_center(idx, 2, 5, 3, r, c));
  CHECK(r == 3.0);
  CHECK(c == 6.0);
  REQUIRE(region_center(idx, 0, 0, 4, r, c));
  CHECK(r == 1.5);
  CHECK(c == 1.5);
}

TEST_CASE("region selection honours its contract") {
  const Image img(3, 64, 64, 0.5f);
  RandomCropResize crop;
  crop.scale_min = 0.3;
  const auto t1 = AugmentationPipeline::view_a(32, crop);
  const auto t2 = AugmentationPipeline::view_b(32, crop);
  LocalMatchConfig cfg;
  cfg.region_size = 8;
  cfg.regions_per_sample = 3;
  Rng rng(4);
  int found = 0;
  for (int t = 0; t < 100; ++t) {
    const auto pair = make_view_pair(img, t, t1, t2, rng);
    Rng sel(t);
    const auto regions = select_local_regions(pair.view_a.index, pair.view_b.index, cfg, sel);
    CHECK(regions.size() <= 3);
    for (size_t i = 0; i < regions.size(); ++i) {
      const auto& s = regions[i];
      CHECK(s.rect_a.top >= 0);
      CHECK(s.rect_a.top + 8 <= 32);
      CHECK(s.rect_b.left >= 0);
      CHECK(s.rect_b.left + 8 <= 32);
      double ar, ac, br, bc;
      REQUIRE(region_center(pair.view_a.index, s.rect_a.top, s.rect_a.left, 8, ar, ac));
      REQUIRE(region_center(pair.view_b.index, s.rect_b.top, s.rect_b.left, 8, br, bc));
      CHECK(std::hypot(ar - br, ac - bc) <= 1.0 + 1e-12);
      for (size_t j = 0; j < i; ++j) {
        CHECK_FALSE(regions[j].rect_a.contains(s.rect_a.top + 3.5, s.rect_a.left + 3.5));
      }
    }
    Rng again(t);
    const auto repeat = select_local_regions(pair.view_a.index, pair.view_b.index, cfg, again);
    REQUIRE(repeat.size() == regions.size());
    for (size_t i = 0; i < regions.size(); ++i) CHECK(repeat[i].rect_b == regions[i].rect_b);
    found += static_cast<int>(regions.size());
  }
  CHECK(found > 100);

  LocalMatchConfig big;
  big.region_size = 40;
  CHECK_THROWS_AS(big.validate(32, 32), InvalidArgument);
}

TEST_CASE("local features average their rectangle") {
  Rng rng(6);
  const auto dense = random_tensor(rng, {2, 3, 6, 6});
  const std::vector<RegionRef> refs{{0, {1, 2, 3}}, {1, {0, 0, 2}}};
  const auto f = extract_local_features(dense, refs);
  REQUIRE(f.dim(0) == 2);
  double s = 0;
  for (int r = 1; r < 4; ++r)
    for (int c = 2; c < 5; ++c) s += dense.at(0, 1, r, c);
  CHECK(f[1] == doctest::Approx(s / 9));

  const auto w = random_tensor(rng, {2, 3});
  Tensor<double> d(dense.shape());
  extract_local_features_backward(w, refs, d);
  CHECK(d.at(0, 1, 2, 3) == doctest::Approx(w[1] / 9));
  CHECK(d.at(0, 1, 0, 0) == 0.0);
  CHECK_THROWS_AS(extract_local_features(dense, {{0, {4, 4, 3}}}), InvalidArgument);
}

TEST_CASE("head losses propagate to their inputs") {
  Rng rng(8);
  ProjectionHead<double> head("proj_local", 5, 32, 4);
  head.init(rng);
  const auto x = random_tensor(rng, {6, 5});
  ContrastiveConfig cfg;
  const auto r = local_matching_loss(x, head, cfg, 1.0, true);
  CHECK_FALSE(r.skipped);
  const double h = 1e-6;
  for (size_t i = 0; i < x.size(); ++i) {
    auto p = x, m = x;
    p[i] += h;
    m[i] -= h;
    const double fd = (local_matching_loss(p, head, cfg, 1.0, false).loss -
                       local_matching_loss(m, head, cfg, 1.0, false).loss) /
                      (2 * h);
    CHECK(r.d_input[i] == doctest::Approx(fd).epsilon(1e-5));
  }
  const auto two = random_tensor(rng, {2, 5});
  CHECK(local_matching_loss(two, head, cfg, 1.0, true).skipped);
}

TEST_CASE("loss weights follow the ablation flags") {
  GLCNetConfig c;
  CHECK(c.combine(2.0, 4.0) == doctest::Approx(3.0));
  CHECK(total_loss(2.0, 4.0, 0.25) == doctest::Approx(3.5));
  c.nolocal = true;
  CHECK(c.global_weight() == 1.0);
  CHECK(c.local_weight() == 0.0);
  c.nolocal = false;
  c.noglobe = true;
  CHECK(c.global_weight() == 0.0);
  CHECK(c.local_weight() == 1.0);
  c.nolocal = true;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("pretrain step routes gradients by flag") {
  NetworkConfig net;
  net.in_channels = 3;
  net.num_classes = 3;
  Rng rng(1);
  std::vector<View> views;
  std::vector<std::vector<LocalRegionSpec>> regions(2);
  const auto t1 = AugmentationPipeline::view_a(32);
  const auto t2 = AugmentationPipeline::view_b(32);
  Image img(3, 48, 48);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  std::vector<View> a, b;
  LocalMatchConfig lc;
  lc.region_size = 8;
  lc.regions_per_sample = 4;
  for (int i = 0; i < 2; ++i) {
    auto pair = make_view_pair(img, i, t1, t2, rng);
    regions[i] = select_local_regions(pair.view_a.index, pair.view_b.index, lc, rng);
    a.push_back(pair.view_a);
    b.push_back(pair.view_b);
  }
  views = a;
  views.insert(views.end(), b.begin(), b.end());

  auto max_grad = [](EncoderDecoderModel<float>& m, const std::string& group) {
    float g = 0;
    for (auto* p : m.trainable_parameters({group}))
      for (float v : p->grad.storage()) g = std::max(g, std::abs(v));
    return g;
  };

  GLCNetConfig cfg;
  cfg.view_size = 32;
  cfg.local = lc;
  cfg.nolocal = true;
  EncoderDecoderModel<float> m1(net);
  m1.init(3);
  PretrainStep s1(m1, cfg);
  s1.run(views, regions, 0.01);
  CHECK(max_grad(m1, "decoder.1") == 0.0f);
  CHECK(max_grad(m1, "proj_local") == 0.0f);
  CHECK(max_grad(m1, "encoder") > 0.0f);

  cfg.nolocal = false;
  cfg.noglobe = true;
  EncoderDecoderModel<float> m2(net);
  m2.init(3);
  PretrainStep s2(m2, cfg);
  const auto r = s2.run(views, regions, 0.01);
  REQUIRE_FALSE(r.local_skipped);
  CHECK(max_grad(m2, "proj_global") == 0.0f);
  CHECK(max_grad(m2, "decoder.3") > 0.0f);
  CHECK(r.report.global == 0.0);
}
