#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glcnet/glcnet.h"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  int64_t seed = -1;
  int threads = 0;
  int verbose = 0;
  bool quiet = false;
};

int exit_code(glc_status s) {
  switch (s) {
    case GLC_OK:
      return 0;
    case GLC_NUMERIC:
    case GLC_INTERNAL:
      return 2;
    default:
      return 1;
  }
}

int report(glc_status s) {
  if (s != GLC_OK) std::fprintf(stderr, "error: %s\n", glc_last_error());
  return exit_code(s);
}

struct ConfigHandle {
  glc_config* p = nullptr;
  ~ConfigHandle() { glc_config_destroy(p); }
};

// defaults < --config file < --set < dedicated flags
glc_status build_config(const Common& c, const std::vector<std::pair<std::string, std::string>>& flags,
                        ConfigHandle& out) {
  glc_status s = c.config.empty() ? glc_config_create(&out.p) : glc_config_load(c.config.c_str(), &out.p);
  if (s != GLC_OK) return s;
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return GLC_INVALID_ARGUMENT;
    }
    s = glc_config_set(out.p, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (s != GLC_OK) return s;
  }
  if (c.seed >= 0 && (s = glc_config_set(out.p, "run.seed", std::to_string(c.seed).c_str())) != GLC_OK) return s;
  if (c.threads > 0 && (s = glc_config_set(out.p, "run.threads", std::to_string(c.threads).c_str())) != GLC_OK)
    return s;
  for (const auto& [k, v] : flags) {
    if ((s = glc_config_set(out.p, k.c_str(), v.c_str())) != GLC_OK) return s;
  }
  return glc_config_validate(out.p);
}

void print_metrics(glc_metrics* m) {
  if (!m) return;
  double oa = 0, kappa = 0, mf1 = 0;
  glc_metrics_summary(m, &oa, &kappa, &mf1);
  std::printf("OA %.4f  Kappa %.4f  macro-F1 %.4f\n", oa, kappa, mf1);
  for (int c = 0; c < glc_metrics_num_classes(m); ++c) {
    double f1 = 0;
    int64_t support = 0;
    glc_metrics_class(m, c, &f1, &support);
    std::printf("  class %d  F1 %.4f  support %" PRId64 "\n", c, f1, support);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GLCNet: global style and local matching contrastive pretraining for segmentation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(glc_version()));

  Common c;
  app.add_option("-c,--config", c.config, "Config file (INI-style sections)")->check(CLI::ExistingFile);
  app.add_option("-s,--set", c.sets, "Override a key, e.g. --set pretrain.lambda=0.5")->take_all();
  app.add_option("--seed", c.seed, "Run seed (run.seed)");
  app.add_option("--threads", c.threads, "Worker threads (run.threads)");
  app.add_flag("-v,--verbose", c.verbose, "More progress output");
  app.add_flag("-q,--quiet", c.quiet, "Only errors");

  std::string out, scenes, manifests, checkpoint, method, load_groups, run_dir;
  double label_fraction = -1;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled scene set");
  synth->add_option("-o,--out", out, "Scene directory")->required();

  auto* tile = app.add_subcommand("tile", "Tile scenes and write pretrain/finetune/test manifests");
  tile->add_option("--scenes", scenes, "Scene directory (default: data.root or $GLCNET_DATA_ROOT)");
  tile->add_option("-o,--out", out, "Tile directory")->required();

  auto* pretrain = app.add_subcommand("pretrain", "Self-supervised pretraining");
  pretrain->add_option("-m,--manifests", manifests, "Tile directory holding pretrain.txt")->required();
  pretrain->add_option("-o,--out", out, "Run directory")->required();
  pretrain->add_option("--method", method, "glcnet or simclr")->check(CLI::IsMember({"glcnet", "simclr"}));

  auto* finetune = app.add_subcommand("finetune", "Fine-tune on a labeled subset and evaluate on test.txt");
  finetune->add_option("-m,--manifests", manifests, "Tile directory")->required();
  finetune->add_option("--checkpoint", checkpoint, "Pretrained checkpoint");
  finetune->add_option("-o,--out", out, "Run directory")->required();
  finetune->add_option("--load-groups", load_groups, "Comma-separated groups to load, or none");
  finetune->add_option("--label-fraction", label_fraction, "Fraction of pretrain tiles used as labels");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a fine-tuned checkpoint on test.txt");
  evaluate->add_option("-m,--manifests", manifests, "Tile directory")->required();
  evaluate->add_option("--checkpoint", checkpoint, "Fine-tuned checkpoint")->required();
  evaluate->add_option("-o,--out", out, "Output directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Pretrain and fine-tune the five ablation configurations");
  ablate->add_option("-m,--manifests", manifests, "Tile directory")->required();
  ablate->add_option("-o,--out", out, "Output directory")->required();

  auto* plot = app.add_subcommand("plot", "Render loss / F1 / ablation charts from a run directory");
  plot->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  glc_set_verbosity(c.quiet ? 0 : 1 + c.verbose);

  if (plot->parsed()) return report(glc_cmd_plot(run_dir.c_str()));

  std::vector<std::pair<std::string, std::string>> flags;
  if (!method.empty()) flags.emplace_back("pretrain.method", method);
  if (!load_groups.empty()) flags.emplace_back("finetune.load_groups", load_groups);
  if (label_fraction >= 0) flags.emplace_back("data.label_fraction", std::to_string(label_fraction));

  ConfigHandle cfg;
  if (glc_status s = build_config(c, flags, cfg); s != GLC_OK) return report(s);

  glc_status s = GLC_OK;
  glc_metrics* metrics = nullptr;
  if (synth->parsed()) {
    s = glc_cmd_synth(cfg.p, out.c_str());
  } else if (tile->parsed()) {
    s = glc_cmd_tile(cfg.p, scenes.c_str(), out.c_str());
  } else if (pretrain->parsed()) {
    s = glc_cmd_pretrain(cfg.p, manifests.c_str(), out.c_str());
  } else if (finetune->parsed()) {
    s = glc_cmd_finetune(cfg.p, manifests.c_str(), checkpoint.empty() ? nullptr : checkpoint.c_str(), out.c_str(),
                         &metrics);
  } else if (evaluate->parsed()) {
    s = glc_cmd_evaluate(cfg.p, manifests.c_str(), checkpoint.c_str(), out.c_str(), &metrics);
  } else if (ablate->parsed()) {
    s = glc_cmd_ablate(cfg.p, manifests.c_str(), out.c_str());
  }
  if (s == GLC_OK && !c.quiet) print_metrics(metrics);
  glc_metrics_destroy(metrics);
  return report(s);
}
