#include <cmath>
#include <fstream>

#include "doctest.h"
#include "glcnet/checkpoint.hpp"
#include "glcnet/error.hpp"
#include "glcnet/optim.hpp"
#include "glcnet/util.hpp"
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

NetworkConfig small_net() {
  NetworkConfig n;
  n.in_channels = 3;
  n.encoder_widths = {4, 6, 8};
  n.encoder_strides = {2, 2, 1};
  n.decoder_widths = {6, 5, 4};
  n.num_classes = 3;
  n.projection_dim = 8;
  return n;
}

bool same_values(EncoderDecoderModel<float>& a, EncoderDecoderModel<float>& b, const std::string& group) {
  for (auto& ga : a.groups()) {
    if (ga.name != group) continue;
    for (auto& gb : b.groups()) {
      if (gb.name != group) continue;
      if (ga.params.size() != gb.params.size()) return false;
      for (size_t i = 0; i < ga.params.size(); ++i) {
        if (!(ga.params[i]->value == gb.params[i]->value)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("convolution gradients match central differences") {
  Rng rng(1);
  Conv2d<double> conv("c", 2, 3, 3, 2, 2, 2, true);
  conv.init_he(rng);
  const auto x = random_tensor(rng, {2, 2, 7, 6});
  auto y = conv.forward(x, true);
  const auto w = random_tensor(rng, y.shape());
  conv.weight.grad.zero();
  conv.bias.grad.zero();
  const auto dx = conv.backward(w);
  const double h = 1e-6;
  for (size_t i = 0; i < x.size(); i += 7) {
    auto p = x, m = x;
    p[i] += h;
    m[i] -= h;
    const double fd = (dot(conv.forward(p, false), w) - dot(conv.forward(m, false), w)) / (2 * h);
    CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-6));
  }
  for (size_t i = 0; i < conv.weight.value.size(); i += 5) {
    const double keep = conv.weight.value[i];
    conv.weight.value[i] = keep + h;
    const double lp = dot(conv.forward(x, false), w);
    conv.weight.value[i] = keep - h;
    const double lm = dot(conv.forward(x, false), w);
    conv.weight.value[i] = keep;
    CHECK(conv.weight.grad[i] == doctest::Approx((lp - lm) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("batch norm gradients match central differences") {
  Rng rng(2);
  BatchNorm2d<double> bn("bn", 3);
  bn.init();
  bn.gamma.value[1] = 1.7;
  const auto x = random_tensor(rng, {3, 3, 2, 2});
  auto y = bn.forward(x, true, true);
  const auto w = random_tensor(rng, y.shape());
  const auto dx = bn.backward(w);
  const double h = 1e-6;
  for (size_t i = 0; i < x.size(); i += 3) {
    auto p = x, m = x;
    p[i] += h;
    m[i] -= h;
    const double fd = (dot(bn.forward(p, true, false), w) - dot(bn.forward(m, true, false), w)) / (2 * h);
    CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("upsampling backward is the adjoint") {
  Rng rng(3);
  const auto x = random_tensor(rng, {1, 2, 3, 4});
  const auto up = upsample_bilinear(x, 4);
  CHECK(up.dim(2) == 12);
  const auto w = random_tensor(rng, up.shape());
  const auto dx = upsample_bilinear_backward(w, 4, 3, 4);
  CHECK(dot(up, w) == doctest::Approx(dot(x, dx)).epsilon(1e-12));
}

TEST_CASE("model shapes and groups") {
  const auto cfg = small_net();
  CHECK(cfg.output_stride() == 4);
  CHECK(cfg.low_level_stride() == 4);
  EncoderDecoderModel<float> m(cfg);
  m.init(0);
  Tensor<float> x({2, 3, 16, 16}, 0.3f);
  auto enc = m.forward_encoder(x, false);
  CHECK(enc.features.shape() == std::vector<int>{2, 8, 4, 4});
  CHECK(m.predict_logits(x).shape() == std::vector<int>{2, 3, 16, 16});
  std::vector<std::string> names;
  for (auto& g : m.groups()) names.push_back(g.name);
  CHECK(names == std::vector<std::string>{"encoder", "decoder.1", "decoder.2", "decoder.3", "seg_head",
                                          "proj_global", "proj_local"});
  CHECK(m.proj_global.input_dim() == 16);
  CHECK_THROWS_AS(m.forward_encoder(Tensor<float>({1, 4, 16, 16}), false), InvalidArgument);
  CHECK_THROWS_AS(m.forward_encoder(Tensor<float>({1, 3, 10, 10}), false), InvalidArgument);

  NetworkConfig bad = cfg;
  bad.encoder_strides = {2, 2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("group initialization depends only on seed and group") {
  const auto cfg = small_net();
  EncoderDecoderModel<float> a(cfg), b(cfg);
  a.init(5);
  b.init(6);
  b.init_group("decoder.2", 5);
  CHECK(same_values(a, b, "decoder.2"));
  CHECK_FALSE(same_values(a, b, "encoder"));
}

TEST_CASE("adam matches a hand-computed first step") {
  Parameter<double> p("p", {2});
  p.value[0] = 1.0;
  p.value[1] = -2.0;
  p.grad[0] = 0.5;
  p.grad[1] = -4.0;
  Adam<double> adam({&p});
  adam.step(0.1);
  CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
  CHECK(p.value[1] == doctest::Approx(-2.0 + 0.1));
  CHECK(cosine_lr(0.01, 0, 10) == doctest::Approx(0.01));
  CHECK(cosine_lr(0.01, 5, 10) == doctest::Approx(0.005));
  CHECK(exponential_lr(1.0, 0.5, 3) == doctest::Approx(0.125));
}

TEST_CASE("checkpoint round trip and partial loading") {
  const auto dir = oracle::scratch("ckpt");
  const auto cfg = small_net();
  EncoderDecoderModel<float> src(cfg);
  src.init(11);
  const auto bundle = capture_checkpoint(src, {{"epoch", "3"}, {"config_hash", "abc"}});
  save_checkpoint(dir / "m.ckpt", bundle);
  const auto back = read_checkpoint(dir / "m.ckpt");
  CHECK(back.metadata.at("epoch") == "3");
  CHECK(back.metadata.at("in_channels") == "3");
  CHECK(back.serialize() == bundle.serialize());

  EncoderDecoderModel<float> dst(cfg), fresh(cfg);
  dst.init(2);
  fresh.init(2);
  const auto report = load_groups(dst, back, {"encoder", "decoder.1"});
  CHECK(report.loaded_groups == std::vector<std::string>{"encoder", "decoder.1"});
  CHECK(same_values(dst, src, "encoder"));
  CHECK(same_values(dst, src, "decoder.1"));
  CHECK(same_values(dst, fresh, "decoder.2"));
  CHECK(same_values(dst, fresh, "seg_head"));
  CHECK_THROWS_AS(load_groups(dst, back, {"decoder.9"}), InvalidArgument);

  auto other = cfg;
  other.encoder_widths = {4, 6, 10};
  EncoderDecoderModel<float> wrong(other);
  CHECK_THROWS_AS(load_groups(wrong, back, {"encoder"}), FormatError);
}

TEST_CASE("checkpoint loading with a different band count keeps the first conv fresh") {
  auto cfg = small_net();
  EncoderDecoderModel<float> src(cfg);
  src.init(1);
  const auto bundle = capture_checkpoint(src, {});
  cfg.in_channels = 5;
  EncoderDecoderModel<float> dst(cfg), fresh(cfg);
  dst.init(4);
  fresh.init(4);
  const auto report = load_groups(dst, bundle, {"encoder"});
  REQUIRE(report.kept_fresh.size() == 1);
  auto enc_dst = dst.trainable_parameters({"encoder"});
  auto enc_fresh = fresh.trainable_parameters({"encoder"});
  auto enc_src = src.trainable_parameters({"encoder"});
  CHECK(enc_dst[0]->value == enc_fresh[0]->value);
  CHECK(enc_dst.back()->value == enc_src.back()->value);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto dir = oracle::scratch("ckpt_bad");
  EncoderDecoderModel<float> m(small_net());
  m.init(0);
  std::string bytes = capture_checkpoint(m, {}).serialize();
  CHECK_NOTHROW(CheckpointBundle::parse(bytes));

  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(CheckpointBundle::parse(flipped), FormatError);
  CHECK_THROWS_AS(CheckpointBundle::parse(bytes.substr(0, bytes.size() - 9)), FormatError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(CheckpointBundle::parse(magic), FormatError);
  CHECK_THROWS_AS(read_checkpoint(dir / "nope.ckpt"), IoError);
}
