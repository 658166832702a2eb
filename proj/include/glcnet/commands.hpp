#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "glcnet/config.hpp"
#include "glcnet/finetune_eval.hpp"
#include "glcnet/glcnet.hpp"

namespace glcnet {

// Each command validates the config, locks its output directory and writes
// the resolved config snapshot (config.cfg) and run_info.txt next to its
// outputs. Manifests live in the tile directory their paths are relative to.

void cmd_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

ManifestSet cmd_tile(const RunConfig& cfg, const std::filesystem::path& scene_dir,
                     const std::filesystem::path& out_dir);

PretrainResult cmd_pretrain(const RunConfig& cfg, const std::filesystem::path& manifest_dir,
                            const std::filesystem::path& out_dir);

struct FinetuneOutcome {
  std::vector<FinetuneLogRow> log;
  LoadReport load;
  size_t labeled_tiles = 0;
  ConfusionMatrix confusion;
  MetricReport metrics;
};

// `checkpoint` may be empty when cfg.load_groups is empty (random init).
// The labeled subset is drawn from pretrain.txt with data.label_fraction.
FinetuneOutcome cmd_finetune(const RunConfig& cfg, const std::filesystem::path& manifest_dir,
                             const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir);

// Evaluates a fine-tuned checkpoint on test.txt.
FinetuneOutcome cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& manifest_dir,
                             const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir);

struct AblationRow {
  std::string name;
  bool nostyle = false;
  bool noglobe = false;
  bool nolocal = false;
  uint64_t config_hash = 0;
  double best_loss = 0;
  MetricReport metrics;
};

// The five configurations, in table order.
std::vector<std::pair<std::string, RunConfig>> ablation_configs(const RunConfig& base);

std::string ablation_csv(const std::vector<AblationRow>& rows);

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const std::filesystem::path& manifest_dir,
                                    const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& run_dir);

}  // namespace glcnet
