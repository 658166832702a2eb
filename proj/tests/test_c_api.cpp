#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "glcnet/glcnet.h"

namespace fs = std::filesystem;

namespace {

std::string get(glc_config* c, const char* key) {
  size_t need = 0;
  REQUIRE(glc_config_get(c, key, nullptr, 0, &need) == GLC_OK);
  std::string s(need, '\0');
  REQUIRE(glc_config_get(c, key, s.data(), s.size(), &need) == GLC_OK);
  s.resize(need - 1);
  return s;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("glcnet_capi_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config handle") {
  glc_config* c = nullptr;
  REQUIRE(glc_config_create(&c) == GLC_OK);
  CHECK(get(c, "pretrain.lambda") == "0.5");
  CHECK(glc_config_set(c, "pretrain.lambda", "0.3") == GLC_OK);
  CHECK(get(c, "pretrain.lambda") == "0.3");
  CHECK(glc_config_set(c, "pretrain.nope", "1") == GLC_INVALID_ARGUMENT);
  CHECK(std::strstr(glc_last_error(), "pretrain.nope") != nullptr);
  CHECK(glc_config_validate(c) == GLC_OK);

  char tiny[4];
  size_t need = 0;
  CHECK(glc_config_get(c, "pretrain.method", tiny, sizeof tiny, &need) == GLC_INVALID_ARGUMENT);
  CHECK(need == 7);
  CHECK(std::strlen(tiny) == 3);

  uint64_t h1 = 0, h2 = 0;
  CHECK(glc_config_hash(c, &h1) == GLC_OK);
  glc_config_set(c, "pretrain.method", "simclr");
  glc_config_set(c, "pretrain.epochs", "7");
  CHECK(glc_config_hash(c, &h2) == GLC_OK);
  CHECK(h1 != h2);

  size_t len = 0;
  CHECK(glc_config_canonical(c, nullptr, 0, &len) == GLC_OK);
  std::string text(len, '\0');
  CHECK(glc_config_canonical(c, text.data(), len, &len) == GLC_OK);
  glc_config* d = nullptr;
  REQUIRE(glc_config_parse(text.c_str(), &d) == GLC_OK);
  uint64_t h3 = 0;
  glc_config_hash(d, &h3);
  CHECK(h3 == h2);
  glc_config_destroy(d);

  glc_config_set(c, "run.threads", "0");
  CHECK(glc_config_validate(c) == GLC_INVALID_ARGUMENT);
  glc_config_destroy(c);
}

TEST_CASE("status codes") {
  glc_config* c = nullptr;
  CHECK(glc_config_load("/nonexistent/x.cfg", &c) == GLC_IO);
  CHECK(c == nullptr);
  CHECK(glc_config_parse("[run]\nseed = q\n", &c) == GLC_INVALID_ARGUMENT);
  CHECK(glc_config_create(nullptr) == GLC_INVALID_ARGUMENT);
  CHECK(glc_cmd_plot(scratch("empty").c_str()) != GLC_OK);
  CHECK(glc_metrics_num_classes(nullptr) == 0);
  CHECK(std::strlen(glc_version()) > 0);
}

TEST_CASE("pipeline through the C interface") {
  glc_set_verbosity(0);
  const auto root = scratch("pipeline");
  glc_config* c = nullptr;
  REQUIRE(glc_config_create(&c) == GLC_OK);
  const char* sets[][2] = {{"run.seed", "3"},
                           {"synth.scene_size", "96"},
                           {"synth.num_scenes", "3"},
                           {"synth.bands", "3"},
                           {"synth.num_classes", "3"},
                           {"data.crop_size", "32"},
                           {"data.stride", "32"},
                           {"data.test_fraction", "0.34"},
                           {"data.label_fraction", "0.2"},
                           {"network.in_channels", "3"},
                           {"network.encoder_widths", "8,8,16"},
                           {"network.encoder_strides", "2,2,1"},
                           {"network.encoder_depth", "1"},
                           {"network.decoder_widths", "8,8,8"},
                           {"network.num_classes", "3"},
                           {"network.projection_dim", "16"},
                           {"pretrain.view_size", "32"},
                           {"pretrain.region_size", "8"},
                           {"pretrain.regions_per_sample", "2"},
                           {"pretrain.batch_size", "4"},
                           {"pretrain.epochs", "1"},
                           {"finetune.epochs", "1"},
                           {"finetune.batch_size", "2"}};
  for (auto& kv : sets) REQUIRE(glc_config_set(c, kv[0], kv[1]) == GLC_OK);

  REQUIRE(glc_cmd_synth(c, (root / "scenes").c_str()) == GLC_OK);
  REQUIRE(glc_cmd_tile(c, (root / "scenes").c_str(), (root / "tiles").c_str()) == GLC_OK);
  REQUIRE(glc_cmd_pretrain(c, (root / "tiles").c_str(), (root / "pre").c_str()) == GLC_OK);
  CHECK(fs::exists(root / "pre" / "loss.csv"));
  glc_metrics* m = nullptr;
  REQUIRE(glc_cmd_finetune(c, (root / "tiles").c_str(), (root / "pre" / "best.ckpt").c_str(),
                           (root / "ft").c_str(), &m) == GLC_OK);
  REQUIRE(m != nullptr);
  double oa = -1, kappa = -2, f1 = -1;
  CHECK(glc_metrics_summary(m, &oa, &kappa, nullptr) == GLC_OK);
  CHECK((oa >= 0 && oa <= 1));
  CHECK(glc_metrics_num_classes(m) == 3);
  int64_t support = -1;
  CHECK(glc_metrics_class(m, 0, &f1, &support) == GLC_OK);
  CHECK(support >= 0);
  CHECK(glc_metrics_class(m, 3, &f1, &support) == GLC_INVALID_ARGUMENT);
  glc_metrics_destroy(m);

  glc_metrics* e = nullptr;
  REQUIRE(glc_cmd_evaluate(c, (root / "tiles").c_str(), (root / "ft" / "finetuned.ckpt").c_str(),
                           (root / "ev").c_str(), &e) == GLC_OK);
  double oa2 = 0;
  glc_metrics_summary(e, &oa2, nullptr, nullptr);
  CHECK(oa2 == oa);
  glc_metrics_destroy(e);
  CHECK(glc_cmd_plot((root / "ft").c_str()) == GLC_OK);
  CHECK(fs::exists(root / "ft" / "f1.png"));

  CHECK(glc_cmd_evaluate(c, (root / "tiles").c_str(), (root / "missing.ckpt").c_str(), (root / "ev2").c_str(),
                         nullptr) == GLC_IO);
  glc_config_set(c, "finetune.load_groups", "encoder");
  CHECK(glc_cmd_finetune(c, (root / "tiles").c_str(), nullptr, (root / "ft2").c_str(), nullptr) ==
        GLC_INVALID_ARGUMENT);
  glc_config_destroy(c);
}
