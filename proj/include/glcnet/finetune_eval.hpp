#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "glcnet/checkpoint.hpp"
#include "glcnet/data_pipeline.hpp"
#include "glcnet/network.hpp"

namespace glcnet {

// Rows are actual classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes);
  ConfusionMatrix(int num_classes, std::vector<int64_t> counts);

  void add(int actual, int predicted, int64_t n = 1);
  void merge(const ConfusionMatrix& other);

  int num_classes() const { return k_; }
  int64_t at(int actual, int predicted) const { return counts_[static_cast<size_t>(actual) * k_ + predicted]; }
  int64_t total() const;
  const std::vector<int64_t>& counts() const { return counts_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int k_ = 0;
  std::vector<int64_t> counts_;
};

struct MetricReport {
  double oa = 0;
  double kappa = 0;
  double macro_f1 = 0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<int64_t> support;  // actual pixels per class
  int64_t total = 0;
};

// F1 of a class with neither support nor predictions is 1 (nothing to get
// wrong); Kappa is 1 when chance agreement is already 1.
MetricReport compute_metrics(const ConfusionMatrix& cm);

// One row per class plus a summary row.
std::string metrics_csv(const MetricReport& m, const std::vector<std::string>& class_names = {});
std::string metrics_summary(const MetricReport& m, const std::vector<std::string>& class_names = {});

struct FinetuneSchedule {
  int epochs = 150;
  int batch_size = 16;
  double initial_lr = 0.001;
  double decay = 0.98;

  void validate() const;
  double lr(int epoch) const;
};

struct LabeledSample {
  Image image;
  LabelMap mask;
};

std::vector<LabeledSample> load_labeled(const DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                                        int threads = 1);

// Fresh model: every group initialized from `seed`, then `load` groups copied
// from the bundle (which may be null when `load` is empty).
std::unique_ptr<EncoderDecoderModel<float>> prepare_finetune_model(const NetworkConfig& cfg,
                                                                   const CheckpointBundle* bundle,
                                                                   const std::vector<std::string>& load,
                                                                   uint64_t seed, LoadReport* report = nullptr);

struct FinetuneLogRow {
  int epoch = 0;
  double loss = 0;
  double lr = 0;
};

std::string finetune_log_csv(const std::vector<FinetuneLogRow>& rows);

// Groups trained during fine-tuning (the projection heads are not part of it).
std::vector<std::string> finetune_groups();

// Per-pixel cross-entropy on labels; pixels whose label is in `ignore` or
// negative do not contribute.
std::vector<FinetuneLogRow> finetune(EncoderDecoderModel<float>& model, const std::vector<LabeledSample>& data,
                                     const FinetuneSchedule& schedule, uint64_t seed,
                                     const std::vector<int>& ignore = {});

// Accumulates predictions over every test tile in inference mode.
ConfusionMatrix evaluate(EncoderDecoderModel<float>& model, const DatasetManifest& manifest,
                         const std::filesystem::path& manifest_dir, const std::vector<int>& ignore = {},
                         int batch_size = 16, int threads = 1);
ConfusionMatrix evaluate(EncoderDecoderModel<float>& model, const std::vector<LabeledSample>& data,
                         const std::vector<int>& ignore = {}, int batch_size = 16);

}  // namespace glcnet
