#include "glcnet/finetune_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "glcnet/error.hpp"
#include "glcnet/optim.hpp"
#include "glcnet/util.hpp"

namespace glcnet {

ConfusionMatrix::ConfusionMatrix(int num_classes) : k_(num_classes) {
  if (num_classes < 1) throw InvalidArgument("confusion matrix needs at least one class");
  counts_.assign(static_cast<size_t>(num_classes) * num_classes, 0);
}

ConfusionMatrix::ConfusionMatrix(int num_classes, std::vector<int64_t> counts) : ConfusionMatrix(num_classes) {
  if (counts.size() != counts_.size()) throw InvalidArgument("confusion matrix needs C*C counts");
  for (auto v : counts) {
    if (v < 0) throw InvalidArgument("confusion counts must be non-negative");
  }
  counts_ = std::move(counts);
}

void ConfusionMatrix::add(int actual, int predicted, int64_t n) {
  if (actual < 0 || actual >= k_ || predicted < 0 || predicted >= k_) {
    throw InvalidArgument("class id (" + std::to_string(actual) + ", " + std::to_string(predicted) +
                          ") outside [0, " + std::to_string(k_) + ")");
  }
  counts_[static_cast<size_t>(actual) * k_ + predicted] += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw InvalidArgument("cannot merge confusion matrices of different class counts");
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

int64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), int64_t{0}); }

MetricReport compute_metrics(const ConfusionMatrix& cm) {
  const int K = cm.num_classes();
  MetricReport m;
  m.total = cm.total();
  if (m.total == 0) throw InvalidArgument("no pixels were evaluated");
  const double N = static_cast<double>(m.total);
  std::vector<double> row(K, 0.0), col(K, 0.0);
  double diag = 0;
  for (int a = 0; a < K; ++a) {
    for (int p = 0; p < K; ++p) {
      row[a] += static_cast<double>(cm.at(a, p));
      col[p] += static_cast<double>(cm.at(a, p));
    }
    diag += static_cast<double>(cm.at(a, a));
  }
  m.oa = diag / N;
  double pe = 0;
  for (int c = 0; c < K; ++c) pe += row[c] * col[c];
  pe /= N * N;
  m.kappa = pe == 1.0 ? 1.0 : (m.oa - pe) / (1.0 - pe);
  for (int c = 0; c < K; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    m.support.push_back(static_cast<int64_t>(row[c]));
    const double prec = col[c] > 0 ? tp / col[c] : 0.0;
    const double rec = row[c] > 0 ? tp / row[c] : 0.0;
    double f1;
    if (row[c] == 0 && col[c] == 0) {
      f1 = 1.0;
    } else {
      f1 = 2.0 * tp / (row[c] + col[c]);
    }
    m.precision.push_back(prec);
    m.recall.push_back(rec);
    m.f1.push_back(f1);
  }
  m.macro_f1 = std::accumulate(m.f1.begin(), m.f1.end(), 0.0) / K;
  return m;
}

namespace {

std::string class_label(const std::vector<std::string>& names, int c) {
  return static_cast<size_t>(c) < names.size() ? names[static_cast<size_t>(c)] : "class_" + std::to_string(c);
}

}  // namespace

std::string metrics_csv(const MetricReport& m, const std::vector<std::string>& class_names) {
  std::string out = "row,support,precision,recall,f1,oa,kappa\n";
  for (size_t c = 0; c < m.f1.size(); ++c) {
    out += class_label(class_names, static_cast<int>(c)) + "," + std::to_string(m.support[c]) + "," +
           format_double(m.precision[c]) + "," + format_double(m.recall[c]) + "," + format_double(m.f1[c]) + ",,\n";
  }
  out += "summary," + std::to_string(m.total) + ",,," + format_double(m.macro_f1) + "," + format_double(m.oa) + "," +
         format_double(m.kappa) + "\n";
  return out;
}

std::string metrics_summary(const MetricReport& m, const std::vector<std::string>& class_names) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(4);
  s << "pixels    " << m.total << "\n";
  s << "OA        " << m.oa << "\n";
  s << "Kappa     " << m.kappa << "\n";
  s << "macro F1  " << m.macro_f1 << "\n";
  for (size_t c = 0; c < m.f1.size(); ++c) {
    s << "F1 " << class_label(class_names, static_cast<int>(c)) << "  " << m.f1[c] << "  (support " << m.support[c]
      << ")\n";
  }
  return s.str();
}

void FinetuneSchedule::validate() const {
  if (epochs < 1) throw InvalidArgument("fine-tune epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("fine-tune batch size must be >= 1");
  if (!(initial_lr > 0.0)) throw InvalidArgument("fine-tune learning rate must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidArgument("fine-tune lr decay must lie in (0, 1]");
}

double FinetuneSchedule::lr(int epoch) const { return exponential_lr(initial_lr, decay, epoch); }

std::vector<LabeledSample> load_labeled(const DatasetManifest& manifest, const std::filesystem::path& manifest_dir,
                                        int threads) {
  std::vector<LabeledSample> out(manifest.entries.size());
  parallel_for(out.size(), threads, [&](size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    if (!e.mask_path) throw InvalidArgument("manifest entry " + e.tile_path + " has no label mask");
    out[i].image = read_image(resolve_entry(manifest_dir, e.tile_path));
    out[i].mask = read_label_map(resolve_entry(manifest_dir, *e.mask_path));
    if (out[i].mask.height != out[i].image.height || out[i].mask.width != out[i].image.width) {
      throw InvalidArgument("mask of " + e.tile_path + " does not match its tile size");
    }
  });
  return out;
}

std::unique_ptr<EncoderDecoderModel<float>> prepare_finetune_model(const NetworkConfig& cfg,
                                                                   const CheckpointBundle* bundle,
                                                                   const std::vector<std::string>& load,
                                                                   uint64_t seed, LoadReport* report) {
  auto model = std::make_unique<EncoderDecoderModel<float>>(cfg);
  model->init(seed);
  if (!load.empty()) {
    if (!bundle) throw InvalidArgument("groups to load were given without a pretrained checkpoint");
    LoadReport r = load_groups(*model, *bundle, load);
    if (report) *report = std::move(r);
  }
  return model;
}

std::string finetune_log_csv(const std::vector<FinetuneLogRow>& rows) {
  std::string out = "epoch,loss,lr\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + format_double(r.loss) + "," + format_double(r.lr) + "\n";
  }
  return out;
}

std::vector<std::string> finetune_groups() { return {"encoder", "decoder.1", "decoder.2", "decoder.3", "seg_head"}; }

namespace {

bool ignored(int label, const std::vector<int>& ignore) {
  return label < 0 || std::find(ignore.begin(), ignore.end(), label) != ignore.end();
}

Tensor<float> stack_images(const std::vector<LabeledSample>& data, const std::vector<size_t>& idx) {
  const Image& f = data[idx.front()].image;
  Tensor<float> x({static_cast<int>(idx.size()), f.channels, f.height, f.width});
  for (size_t i = 0; i < idx.size(); ++i) {
    const Image& im = data[idx[i]].image;
    if (im.channels != f.channels || im.height != f.height || im.width != f.width) {
      throw InvalidArgument("labeled tiles in a batch must share channels and size");
    }
    std::copy(im.data.begin(), im.data.end(), x.slice(static_cast<int>(i)));
  }
  return x;
}

// Mean cross-entropy over counted pixels; fills d_logits with its gradient.
double cross_entropy(const Tensor<float>& logits, const std::vector<LabeledSample>& data,
                     const std::vector<size_t>& idx, const std::vector<int>& ignore, Tensor<float>& d_logits) {
  const int B = logits.dim(0), K = logits.dim(1);
  const size_t P = static_cast<size_t>(logits.dim(2)) * logits.dim(3);
  d_logits = Tensor<float>(logits.shape());
  double loss = 0;
  int64_t counted = 0;
  std::vector<double> prob(static_cast<size_t>(K));
  for (int b = 0; b < B; ++b) {
    const LabelMap& mask = data[idx[static_cast<size_t>(b)]].mask;
    const float* z = logits.slice(b);
    float* dz = d_logits.slice(b);
    for (size_t p = 0; p < P; ++p) {
      const int y = mask.data[p];
      if (ignored(y, ignore)) continue;
      if (y >= K) throw InvalidArgument("label " + std::to_string(y) + " outside [0, " + std::to_string(K) + ")");
      double mx = z[p];
      for (int k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(z[k * P + p]));
      double sum = 0;
      for (int k = 0; k < K; ++k) {
        prob[static_cast<size_t>(k)] = std::exp(z[k * P + p] - mx);
        sum += prob[static_cast<size_t>(k)];
      }
      loss += std::log(sum) - (z[static_cast<size_t>(y) * P + p] - mx);
      for (int k = 0; k < K; ++k) dz[k * P + p] = static_cast<float>(prob[static_cast<size_t>(k)] / sum);
      dz[static_cast<size_t>(y) * P + p] -= 1.0f;
      ++counted;
    }
  }
  if (counted == 0) return 0.0;
  const float scale = 1.0f / static_cast<float>(counted);
  for (auto& v : d_logits.values()) v *= scale;
  return loss / static_cast<double>(counted);
}

}  // namespace

std::vector<FinetuneLogRow> finetune(EncoderDecoderModel<float>& model, const std::vector<LabeledSample>& data,
                                     const FinetuneSchedule& schedule, uint64_t seed, const std::vector<int>& ignore) {
  schedule.validate();
  if (data.empty()) throw InvalidArgument("fine-tuning needs at least one labeled tile");
  Adam<float> adam(model.trainable_parameters(finetune_groups()));
  std::vector<FinetuneLogRow> log;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr = schedule.lr(epoch);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(Rng::derive(seed, "finetune.shuffle", static_cast<uint64_t>(epoch)));
    rng.shuffle(order);
    double loss_sum = 0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(schedule.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(schedule.batch_size));
      const std::vector<size_t> idx(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
      model.zero_grad();
      const Tensor<float> x = stack_images(data, idx);
      auto enc = model.forward_encoder(x, true, true);
      const Tensor<float> dense = model.forward_decoder(enc, true, true);
      const Tensor<float> logits = model.forward_segmentation(dense, true);
      Tensor<float> d_logits;
      const double loss = cross_entropy(logits, data, idx, ignore, d_logits);
      if (!std::isfinite(loss)) {
        throw NumericError("fine-tune loss is not finite at epoch " + std::to_string(epoch));
      }
      auto eg = model.backward_decoder(model.backward_segmentation(d_logits));
      model.backward_encoder(eg.features, eg.low_level);
      adam.step(lr);
      loss_sum += loss;
      ++batches;
    }
    log.push_back({epoch, loss_sum / batches, lr});
    if (verbosity() >= 2) log_info("finetune epoch " + std::to_string(epoch) + ": loss " + format_double(log.back().loss));
  }
  return log;
}

namespace {

void accumulate(EncoderDecoderModel<float>& model, const std::vector<LabeledSample>& data,
                const std::vector<size_t>& idx, const std::vector<int>& ignore, ConfusionMatrix& cm) {
  const Tensor<float> logits = model.predict_logits(stack_images(data, idx));
  const int K = logits.dim(1);
  const size_t P = static_cast<size_t>(logits.dim(2)) * logits.dim(3);
  for (size_t b = 0; b < idx.size(); ++b) {
    const float* z = logits.slice(static_cast<int>(b));
    const LabelMap& mask = data[idx[b]].mask;
    for (size_t p = 0; p < P; ++p) {
      const int y = mask.data[p];
      if (ignored(y, ignore)) continue;
      int best = 0;
      for (int k = 1; k < K; ++k) {
        if (z[k * P + p] > z[static_cast<size_t>(best) * P + p]) best = k;
      }
      cm.add(y, best);
    }
  }
}

}  // namespace

ConfusionMatrix evaluate(EncoderDecoderModel<float>& model, const std::vector<LabeledSample>& data,
                         const std::vector<int>& ignore, int batch_size) {
  if (data.empty()) throw InvalidArgument("evaluation needs at least one labeled tile");
  if (batch_size < 1) throw InvalidArgument("evaluation batch size must be >= 1");
  ConfusionMatrix cm(model.config().num_classes);
  for (size_t start = 0; start < data.size(); start += static_cast<size_t>(batch_size)) {
    std::vector<size_t> idx;
    for (size_t i = start; i < std::min(data.size(), start + static_cast<size_t>(batch_size)); ++i) idx.push_back(i);
    accumulate(model, data, idx, ignore, cm);
  }
  return cm;
}

ConfusionMatrix evaluate(EncoderDecoderModel<float>& model, const DatasetManifest& manifest,
                         const std::filesystem::path& manifest_dir, const std::vector<int>& ignore, int batch_size,
                         int threads) {
  if (manifest.entries.empty()) throw InvalidArgument("test manifest is empty");
  if (batch_size < 1) throw InvalidArgument("evaluation batch size must be >= 1");
  ConfusionMatrix cm(model.config().num_classes);
  // Loaded in chunks so large test sets need not fit in memory at once.
  const size_t chunk = static_cast<size_t>(batch_size) * 16;
  for (size_t start = 0; start < manifest.entries.size(); start += chunk) {
    DatasetManifest part = manifest;
    const size_t end = std::min(manifest.entries.size(), start + chunk);
    part.entries.assign(manifest.entries.begin() + static_cast<long>(start),
                        manifest.entries.begin() + static_cast<long>(end));
    cm.merge(evaluate(model, load_labeled(part, manifest_dir, threads), ignore, batch_size));
  }
  return cm;
}

}  // namespace glcnet
