#include "glcnet/commands.hpp"

#include "glcnet/error.hpp"
#include "glcnet/plot.hpp"
#include "glcnet/util.hpp"

namespace glcnet {

namespace fs = std::filesystem;

namespace {

using InfoList = std::vector<std::pair<std::string, std::string>>;

void write_run_info(const fs::path& dir, const std::string& command, const RunConfig& cfg, const InfoList& extra) {
  std::string out = "command=" + command + "\nconfig_hash=" + hex64(cfg.hash()) + "\nseed=" + std::to_string(cfg.seed) +
                    "\n";
  for (const auto& [k, v] : extra) out += k + "=" + v + "\n";
  write_file_atomic(dir / "run_info.txt", out);
}

fs::path prepare_dir(const fs::path& dir) {
  if (dir.empty()) throw InvalidArgument("output directory is required");
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> checkpoint_metadata(const RunConfig& cfg, const std::string& stage) {
  std::map<std::string, std::string> meta;
  meta["stage"] = stage;
  meta["config_hash"] = hex64(cfg.hash());
  meta["method"] = cfg.method;
  for (const auto& k : RunConfig::keys()) {
    if (k.rfind("pretrain.", 0) == 0 || k.rfind("network.", 0) == 0) meta[k] = cfg.get(k);
  }
  return meta;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "actual\\predicted";
  for (int p = 0; p < cm.num_classes(); ++p) out += "," + std::to_string(p);
  out += "\n";
  for (int a = 0; a < cm.num_classes(); ++a) {
    out += std::to_string(a);
    for (int p = 0; p < cm.num_classes(); ++p) out += "," + std::to_string(cm.at(a, p));
    out += "\n";
  }
  return out;
}

void check_bands(const std::vector<LabeledSample>& data, int in_channels) {
  for (const auto& s : data) {
    if (s.image.channels != in_channels) {
      throw InvalidArgument("labeled tile has " + std::to_string(s.image.channels) + " bands, network.in_channels is " +
                            std::to_string(in_channels));
    }
  }
}

void write_metrics(const fs::path& dir, const FinetuneOutcome& out) {
  write_file_atomic(dir / "metrics.csv", metrics_csv(out.metrics));
  write_file_atomic(dir / "metrics.txt", metrics_summary(out.metrics));
  write_file_atomic(dir / "confusion.csv", confusion_csv(out.confusion));
}

}  // namespace

void cmd_synth(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  DirectoryLock lock(prepare_dir(out_dir));
  write_synthetic_dataset(cfg.synth, out_dir, cfg.threads);
  write_config_snapshot(cfg, out_dir);
  write_run_info(out_dir, "synth", cfg,
                 {{"scenes", std::to_string(cfg.synth.num_scenes)}, {"scene_size", std::to_string(cfg.synth.scene_size)}});
  log_info("synth: wrote " + std::to_string(cfg.synth.num_scenes) + " scenes to " + out_dir.string());
}

ManifestSet cmd_tile(const RunConfig& cfg, const fs::path& scene_dir, const fs::path& out_dir) {
  cfg.validate();
  const fs::path src = scene_dir.empty() ? cfg.resolved_data_root() : scene_dir;
  DirectoryLock lock(prepare_dir(out_dir));
  const TilingSummary tiling = tile_directory(src, out_dir, cfg.crop_size, cfg.stride, cfg.threads);
  const ManifestSet set = build_manifest(out_dir, cfg.split_spec(), cfg.label_fraction, cfg.seed);
  write_manifest_set(set, out_dir);
  write_config_snapshot(cfg, out_dir);
  write_run_info(out_dir, "tile", cfg,
                 {{"scene_dir", src.string()},
                  {"pretrain_tiles", std::to_string(set.pretrain.entries.size())},
                  {"finetune_tiles", std::to_string(set.finetune.entries.size())},
                  {"test_tiles", std::to_string(set.test.entries.size())}});
  (void)tiling;
  log_info("tile: " + std::to_string(set.pretrain.entries.size()) + " pretrain, " +
           std::to_string(set.finetune.entries.size()) + " finetune, " + std::to_string(set.test.entries.size()) +
           " test tiles");
  return set;
}

PretrainResult cmd_pretrain(const RunConfig& cfg, const fs::path& manifest_dir, const fs::path& out_dir) {
  cfg.validate();
  DirectoryLock lock(prepare_dir(out_dir));
  write_config_snapshot(cfg, out_dir);
  PretrainJob job;
  job.manifest = read_manifest(manifest_dir / "pretrain.txt", Split::kPretrain);
  job.manifest_dir = manifest_dir;
  job.cfg = cfg.resolved_glcnet();
  job.t1 = cfg.t1();
  job.t2 = cfg.t2();
  job.out_dir = out_dir;
  job.metadata = checkpoint_metadata(cfg, "pretrain");
  EncoderDecoderModel<float> model(cfg.resolved_network());
  model.init(cfg.seed);
  log_info("pretrain: " + cfg.method + " on " + std::to_string(job.manifest.entries.size()) + " tiles, config " +
           hex64(cfg.hash()));
  PretrainResult r = run_pretraining(model, job);
  write_run_info(out_dir, "pretrain", cfg,
                 {{"method", cfg.method},
                  {"nostyle", job.cfg.nostyle ? "true" : "false"},
                  {"noglobe", job.cfg.noglobe ? "true" : "false"},
                  {"nolocal", job.cfg.nolocal ? "true" : "false"},
                  {"tiles", std::to_string(job.manifest.entries.size())},
                  {"steps", std::to_string(r.steps.size())},
                  {"best_epoch", std::to_string(r.best_epoch)},
                  {"best_loss", format_double(r.best_loss)},
                  {"local_skips", std::to_string(r.local_skips)}});
  return r;
}

FinetuneOutcome cmd_finetune(const RunConfig& cfg, const fs::path& manifest_dir, const fs::path& checkpoint,
                             const fs::path& out_dir) {
  cfg.validate();
  DirectoryLock lock(prepare_dir(out_dir));
  write_config_snapshot(cfg, out_dir);
  const DatasetManifest pretrain = read_manifest(manifest_dir / "pretrain.txt", Split::kPretrain);
  const DatasetManifest subset = select_label_subset(pretrain, cfg.label_fraction, cfg.seed);
  write_file_atomic(out_dir / "finetune_subset.txt", subset.serialize());

  CheckpointBundle bundle;
  const CheckpointBundle* bundle_ptr = nullptr;
  if (!cfg.load_groups.empty()) {
    if (checkpoint.empty()) throw InvalidArgument("finetune.load_groups is set but no checkpoint was given");
    bundle = read_checkpoint(checkpoint);
    bundle_ptr = &bundle;
  }
  FinetuneOutcome out;
  out.labeled_tiles = subset.entries.size();
  auto model = prepare_finetune_model(cfg.resolved_network(), bundle_ptr, cfg.load_groups, cfg.seed, &out.load);
  for (const auto& t : out.load.kept_fresh) log_info("finetune: band count differs, " + t + " keeps its fresh init");

  const auto data = load_labeled(subset, manifest_dir, cfg.threads);
  check_bands(data, cfg.network.in_channels);
  log_info("finetune: " + std::to_string(data.size()) + " labeled tiles, loading {" + join(cfg.load_groups, ",") + "}");
  out.log = finetune(*model, data, cfg.schedule, cfg.seed, cfg.ignore_classes);
  write_file_atomic(out_dir / "train_log.csv", finetune_log_csv(out.log));
  auto meta = checkpoint_metadata(cfg, "finetune");
  meta["epoch"] = std::to_string(cfg.schedule.epochs - 1);
  meta["loss"] = format_double(out.log.back().loss);
  meta["seed"] = std::to_string(cfg.seed);
  meta["load_groups"] = join(cfg.load_groups, ",");
  save_checkpoint(out_dir / "finetuned.ckpt", capture_checkpoint(*model, meta));

  const DatasetManifest test = read_manifest(manifest_dir / "test.txt", Split::kTest);
  InfoList info = {{"load_groups", join(cfg.load_groups, ",")},
                   {"checkpoint", checkpoint.string()},
                   {"label_fraction", format_double(cfg.label_fraction)},
                   {"pretrain_tiles", std::to_string(pretrain.entries.size())},
                   {"label_subset_size", std::to_string(subset.entries.size())},
                   {"kept_fresh", join(out.load.kept_fresh, ",")},
                   {"final_loss", format_double(out.log.back().loss)}};
  if (test.entries.empty()) {
    log_info("finetune: test manifest is empty, skipping evaluation");
  } else {
    out.confusion = evaluate(*model, test, manifest_dir, cfg.ignore_classes, cfg.eval_batch_size, cfg.threads);
    out.metrics = compute_metrics(out.confusion);
    write_metrics(out_dir, out);
    info.push_back({"oa", format_double(out.metrics.oa)});
    info.push_back({"kappa", format_double(out.metrics.kappa)});
    info.push_back({"macro_f1", format_double(out.metrics.macro_f1)});
    log_info("finetune: OA " + format_double(out.metrics.oa) + ", Kappa " + format_double(out.metrics.kappa));
  }
  write_run_info(out_dir, "finetune", cfg, info);
  return out;
}

FinetuneOutcome cmd_evaluate(const RunConfig& cfg, const fs::path& manifest_dir, const fs::path& checkpoint,
                             const fs::path& out_dir) {
  cfg.validate();
  if (checkpoint.empty()) throw InvalidArgument("evaluate needs a fine-tuned checkpoint");
  DirectoryLock lock(prepare_dir(out_dir));
  write_config_snapshot(cfg, out_dir);
  const CheckpointBundle bundle = read_checkpoint(checkpoint);
  FinetuneOutcome out;
  auto model = prepare_finetune_model(cfg.resolved_network(), &bundle, finetune_groups(), cfg.seed, &out.load);
  const DatasetManifest test = read_manifest(manifest_dir / "test.txt", Split::kTest);
  out.confusion = evaluate(*model, test, manifest_dir, cfg.ignore_classes, cfg.eval_batch_size, cfg.threads);
  out.metrics = compute_metrics(out.confusion);
  write_metrics(out_dir, out);
  write_run_info(out_dir, "evaluate", cfg,
                 {{"checkpoint", checkpoint.string()},
                  {"test_tiles", std::to_string(test.entries.size())},
                  {"oa", format_double(out.metrics.oa)},
                  {"kappa", format_double(out.metrics.kappa)},
                  {"macro_f1", format_double(out.metrics.macro_f1)}});
  return out;
}

std::vector<std::pair<std::string, RunConfig>> ablation_configs(const RunConfig& base) {
  struct Flags {
    const char* name;
    bool nostyle, noglobe, nolocal;
  };
  const Flags table[] = {{"full", false, false, false},
                         {"nostyle", true, false, false},
                         {"noglobe", false, true, false},
                         {"nolocal", false, false, true},
                         {"nostyle_and_nolocal", true, false, true}};
  std::vector<std::pair<std::string, RunConfig>> out;
  for (const auto& f : table) {
    RunConfig c = base;
    c.method = "glcnet";
    c.glc.nostyle = f.nostyle;
    c.glc.noglobe = f.noglobe;
    c.glc.nolocal = f.nolocal;
    out.emplace_back(f.name, c);
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "config,nostyle,noglobe,nolocal,config_hash,best_pretrain_loss,oa,kappa,macro_f1\n";
  for (const auto& r : rows) {
    out += r.name + "," + (r.nostyle ? "1" : "0") + "," + (r.noglobe ? "1" : "0") + "," + (r.nolocal ? "1" : "0") +
           "," + hex64(r.config_hash) + "," + format_double(r.best_loss) + "," + format_double(r.metrics.oa) + "," +
           format_double(r.metrics.kappa) + "," + format_double(r.metrics.macro_f1) + "\n";
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& cfg, const fs::path& manifest_dir, const fs::path& out_dir) {
  cfg.validate();
  if (cfg.load_groups.empty()) throw InvalidArgument("ablation needs finetune.load_groups (at least the encoder)");
  DirectoryLock lock(prepare_dir(out_dir));
  write_config_snapshot(cfg, out_dir);
  std::vector<AblationRow> rows;
  for (const auto& [name, c] : ablation_configs(cfg)) {
    log_info("ablate: " + name);
    const fs::path dir = out_dir / name;
    const PretrainResult pr = cmd_pretrain(c, manifest_dir, dir / "pretrain");
    const FinetuneOutcome ft = cmd_finetune(c, manifest_dir, dir / "pretrain" / "best.ckpt", dir / "finetune");
    AblationRow row;
    row.name = name;
    row.nostyle = c.glc.nostyle;
    row.noglobe = c.glc.noglobe;
    row.nolocal = c.glc.nolocal;
    row.config_hash = c.hash();
    row.best_loss = pr.best_loss;
    row.metrics = ft.metrics;
    rows.push_back(std::move(row));
    write_file_atomic(out_dir / "ablation.csv", ablation_csv(rows));
  }
  write_run_info(out_dir, "ablate", cfg, {{"configurations", std::to_string(rows.size())}});
  return rows;
}

std::vector<fs::path> cmd_plot(const fs::path& run_dir) { return plot_run(run_dir); }

}  // namespace glcnet
