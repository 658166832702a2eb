#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glcnet/augmentation.hpp"
#include "glcnet/data_pipeline.hpp"
#include "glcnet/finetune_eval.hpp"
#include "glcnet/glcnet.hpp"
#include "glcnet/network.hpp"

namespace glcnet {

// Every setting of a run. Defaults are the paper-scale settings; the desk
// profile lives in configs/desk.cfg.
struct RunConfig {
  RunConfig();

  // [run]
  uint64_t seed = 0;
  int threads = 1;

  // [data]
  std::string data_root;  // GLCNET_DATA_ROOT when empty
  int crop_size = 256;
  int stride = 249;
  double label_fraction = 0.01;
  double test_fraction = 0.37;
  std::vector<std::string> test_scenes;
  size_t test_limit = 1500;

  SyntheticSceneSpec synth;  // [synth]
  NetworkConfig network;     // [network]

  // [augment]
  RandomCropResize crop;
  RandomFlip flip;
  RandomRotate90 rotate;
  ColorJitter jitter;
  GaussianBlur blur;
  GaussianNoise noise;
  RandomGrayscale gray;

  // [pretrain]
  std::string method = "glcnet";  // glcnet | simclr (= nostyle + nolocal)
  GLCNetConfig glc;

  // [finetune]
  FinetuneSchedule schedule;
  std::vector<std::string> load_groups{"encoder"};
  std::vector<int> ignore_classes;
  int eval_batch_size = 16;

  // Applies the method preset to the ablation flags.
  GLCNetConfig resolved_glcnet() const;
  NetworkConfig resolved_network() const;
  AugmentationPipeline t1() const;
  AugmentationPipeline t2() const;
  SplitSpec split_spec() const;
  std::filesystem::path resolved_data_root() const;

  // Every validation failure, empty when the config is usable.
  std::vector<std::string> errors() const;
  void validate() const;  // throws InvalidArgument listing errors()

  void set(const std::string& dotted_key, const std::string& value);
  std::string get(const std::string& dotted_key) const;
  static std::vector<std::string> keys();

  // `[section]` blocks with `key = value` lines, every key, fixed order.
  std::string canonical() const;
  // FNV-1a of the canonical form with the method preset folded into the
  // ablation flags, so `simclr` hashes like glcnet+nostyle+nolocal.
  uint64_t hash() const;

  // Unknown sections/keys and malformed values are collected and thrown
  // together.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
};

// Writes `config.cfg` (canonical snapshot headed by its hash).
void write_config_snapshot(const RunConfig& cfg, const std::filesystem::path& dir);

}  // namespace glcnet
