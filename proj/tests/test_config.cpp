#include <cstdlib>

#include "doctest.h"
#include "glcnet/config.hpp"
#include "glcnet/error.hpp"
#include "glcnet/util.hpp"
#include "oracles.hpp"

using namespace glcnet;

namespace {

std::string error_of(const std::string& text) {
  try {
    RunConfig::parse(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults are the paper-scale settings") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.glc.lambda == 0.5);
  CHECK(c.glc.view_size == 224);
  CHECK(c.glc.local.region_size == 48);
  CHECK(c.glc.local.regions_per_sample == 4);
  CHECK(c.glc.batch_size == 64);
  CHECK(c.glc.epochs == 400);
  CHECK(c.schedule.epochs == 150);
  CHECK(c.schedule.decay == 0.98);
  CHECK(c.label_fraction == 0.01);
  CHECK(c.network.in_channels == 4);
}

TEST_CASE("values and comments") {
  const auto c = RunConfig::parse(
      "; header\n[run]\nseed = 42\n[pretrain]\nlambda = 0.25\nmethod = simclr\n[finetune]\nload_groups = "
      "encoder, decoder.1\nignore_classes = 5\n");
  CHECK(c.seed == 42);
  CHECK(c.glc.lambda == 0.25);
  CHECK(c.load_groups == std::vector<std::string>{"encoder", "decoder.1"});
  CHECK(c.ignore_classes == std::vector<int>{5});
  const auto g = c.resolved_glcnet();
  CHECK(g.nostyle);
  CHECK(g.nolocal);
  CHECK_FALSE(g.noglobe);
  CHECK(g.seed == 42);

  RunConfig d;
  d.set("finetune.load_groups", "none");
  CHECK(d.load_groups.empty());
  d.set("network.encoder_widths", "8,16");
  CHECK(d.get("network.encoder_widths") == "8,16");
  CHECK_THROWS_AS(d.set("network.bogus", "1"), InvalidArgument);
  CHECK_THROWS_AS(d.set("run.seed", "abc"), InvalidArgument);
}

TEST_CASE("every error is reported at once") {
  const auto msg = error_of("[run]\nseed = x\n[nope]\na = 1\n[pretrain]\nlamda = 1\nlambda = 0.5\nlambda = 0.6\njunk\n");
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("unknown section [nope]") != std::string::npos);
  CHECK(msg.find("pretrain.lamda") != std::string::npos);
  CHECK(msg.find("duplicate key 'pretrain.lambda'") != std::string::npos);
  CHECK(msg.find("line 9") != std::string::npos);
}

TEST_CASE("validation lists every problem") {
  RunConfig c;
  c.threads = 0;
  c.label_fraction = 2;
  c.glc.view_size = 100;
  c.load_groups = {"proj_local", "decoder.7"};
  const auto errs = c.errors();
  CHECK(errs.size() >= 5);
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("canonical form round trips and hashes stably") {
  RunConfig c;
  c.seed = 9;
  c.glc.contrastive.temperature = 0.2;
  c.test_scenes = {"a", "b"};
  const auto back = RunConfig::parse(c.canonical());
  CHECK(back.canonical() == c.canonical());
  CHECK(back.hash() == c.hash());
  for (const auto& k : RunConfig::keys()) CHECK(back.get(k) == c.get(k));

  RunConfig other = c;
  other.glc.lambda = 0.4;
  CHECK(other.hash() != c.hash());
}

TEST_CASE("simclr hashes like nostyle and nolocal") {
  RunConfig a, b;
  a.method = "simclr";
  b.glc.nostyle = true;
  b.glc.nolocal = true;
  CHECK(a.hash() == b.hash());
  CHECK(a.canonical() != b.canonical());
  RunConfig c;
  CHECK(c.hash() != a.hash());
}

TEST_CASE("snapshot files reload to the same config") {
  const auto dir = oracle::scratch("snapshot");
  RunConfig c;
  c.seed = 3;
  c.network.num_classes = 5;
  write_config_snapshot(c, dir);
  const auto text = read_text_file(dir / "config.cfg");
  CHECK(text.rfind("# config_hash = " + hex64(c.hash()), 0) == 0);
  CHECK(RunConfig::load(dir / "config.cfg").hash() == c.hash());
  CHECK_THROWS_AS(RunConfig::load(dir / "absent.cfg"), IoError);
}

TEST_CASE("data root falls back to the environment") {
  RunConfig c;
  ::setenv("GLCNET_DATA_ROOT", "/data/scenes", 1);
  CHECK(c.resolved_data_root() == std::filesystem::path("/data/scenes"));
  c.data_root = "/elsewhere";
  CHECK(c.resolved_data_root() == std::filesystem::path("/elsewhere"));
  ::unsetenv("GLCNET_DATA_ROOT");
}
