#include "glcnet/glcnet.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "glcnet/error.hpp"
#include "glcnet/util.hpp"

namespace glcnet {

// ---------------------------------------------------------------------------
// Style features

template <typename T>
Tensor<T> extract_style(const Tensor<T>& features, bool use_style, StyleMode mode) {
  if (features.ndim() != 4) throw InvalidArgument("style extraction expects an (N, C, h, w) feature map");
  const int N = features.dim(0), C = features.dim(1);
  const size_t P = static_cast<size_t>(features.dim(2)) * features.dim(3);
  if (P == 0) throw InvalidArgument("style extraction over an empty spatial extent");
  const int D = use_style ? 2 * C : C;
  Tensor<T> out({N, D});
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* x = features.slice(n) + c * P;
      double sum = 0;
      for (size_t i = 0; i < P; ++i) sum += x[i];
      const double mean = sum / static_cast<double>(P);
      out[static_cast<size_t>(n) * D + c] = static_cast<T>(mean);
      if (!use_style) continue;
      double ss = 0;
      for (size_t i = 0; i < P; ++i) {
        const double d = x[i] - mean;
        ss += d * d;
      }
      const double var = ss / static_cast<double>(P);
      out[static_cast<size_t>(n) * D + C + c] =
          static_cast<T>(mode == StyleMode::kVariance ? var : std::sqrt(var + kStyleStdEps));
    }
  }
  return out;
}

template <typename T>
Tensor<T> extract_style_backward(const Tensor<T>& features, const Tensor<T>& d_style, bool use_style,
                                 StyleMode mode) {
  const int N = features.dim(0), C = features.dim(1);
  const size_t P = static_cast<size_t>(features.dim(2)) * features.dim(3);
  const int D = use_style ? 2 * C : C;
  if (d_style.ndim() != 2 || d_style.dim(0) != N || d_style.dim(1) != D) {
    throw InvalidArgument("style gradient shape mismatch");
  }
  Tensor<T> dx(features.shape());
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* x = features.slice(n) + c * P;
      T* g = dx.slice(n) + c * P;
      const double dmean = d_style[static_cast<size_t>(n) * D + c] / static_cast<double>(P);
      if (!use_style) {
        for (size_t i = 0; i < P; ++i) g[i] = static_cast<T>(dmean);
        continue;
      }
      double sum = 0;
      for (size_t i = 0; i < P; ++i) sum += x[i];
      const double mean = sum / static_cast<double>(P);
      double dvar = d_style[static_cast<size_t>(n) * D + C + c];
      if (mode == StyleMode::kStd) {
        double ss = 0;
        for (size_t i = 0; i < P; ++i) ss += (x[i] - mean) * (x[i] - mean);
        dvar /= 2.0 * std::sqrt(ss / static_cast<double>(P) + kStyleStdEps);
      }
      const double k = 2.0 * dvar / static_cast<double>(P);
      // The mean's own dependence cancels: sum_i (x_i - mean) = 0.
      for (size_t i = 0; i < P; ++i) g[i] = static_cast<T>(dmean + k * (x[i] - mean));
    }
  }
  return dx;
}

std::vector<double> extract_style(const std::vector<double>& map, int channels, int height, int width,
                                  StyleMode mode) {
  if (static_cast<size_t>(channels) * height * width != map.size()) {
    throw InvalidArgument("feature map size does not match its dimensions");
  }
  Tensor<double> t({1, channels, height, width});
  std::copy(map.begin(), map.end(), t.data());
  const Tensor<double> s = extract_style(t, true, mode);
  return s.storage();
}

// ---------------------------------------------------------------------------
// Local region selection

void LocalMatchConfig::validate(int view_height, int view_width) const {
  if (region_size < 1) throw InvalidArgument("region size must be >= 1");
  if (regions_per_sample < 1) throw InvalidArgument("regions per sample must be >= 1");
  if (region_size > view_height || region_size > view_width) {
    throw InvalidArgument("region size " + std::to_string(region_size) + " exceeds view " +
                          std::to_string(view_height) + "x" + std::to_string(view_width));
  }
  if (!(match_tolerance >= 0.0)) throw InvalidArgument("match tolerance must be >= 0");
  if (max_border_shift < 0) throw InvalidArgument("max border shift must be >= 0");
  if (max_attempts < 0) throw InvalidArgument("max attempts must be >= 0");
}

namespace {

// Center coordinate of the block whose top-left is (r0, c0); the block is
// 1x1 for odd sizes and 2x2 for even sizes.
bool block_center(const IndexLabel& index, int r0, int c0, bool even, double& row, double& col) {
  const int k = even ? 2 : 1;
  if (r0 < 0 || c0 < 0 || r0 + k > index.height || c0 + k > index.width) return false;
  double rs = 0, cs = 0;
  for (int dr = 0; dr < k; ++dr) {
    for (int dc = 0; dc < k; ++dc) {
      if (!index.is_valid(r0 + dr, c0 + dc)) return false;
      rs += index.row(r0 + dr, c0 + dc);
      cs += index.col(r0 + dr, c0 + dc);
    }
  }
  row = rs / (k * k);
  col = cs / (k * k);
  return true;
}

}  // namespace

bool region_center(const IndexLabel& index, int top, int left, int size, double& row, double& col) {
  const int o = (size - 1) / 2;
  return block_center(index, top + o, left + o, size % 2 == 0, row, col);
}

std::vector<LocalRegionSpec> select_local_regions(const IndexLabel& index_a, const IndexLabel& index_b,
                                                  const LocalMatchConfig& cfg, Rng& rng) {
  cfg.validate(std::min(index_a.height, index_b.height), std::min(index_a.width, index_b.width));
  const int s = cfg.region_size;
  const int o = (s - 1) / 2;
  const bool even = s % 2 == 0;
  const int k = even ? 2 : 1;

  // Center coordinates of every block position in view b.
  const int bh = index_b.height - k + 1, bw = index_b.width - k + 1;
  std::vector<double> brow(static_cast<size_t>(bh) * bw), bcol(brow.size());
  std::vector<uint8_t> bok(brow.size());
  for (int r = 0; r < bh; ++r) {
    for (int c = 0; c < bw; ++c) {
      const size_t i = static_cast<size_t>(r) * bw + c;
      bok[i] = block_center(index_b, r, c, even, brow[i], bcol[i]) ? 1 : 0;
    }
  }

  const int attempts = cfg.max_attempts > 0 ? cfg.max_attempts : 10 * cfg.regions_per_sample;
  std::vector<LocalRegionSpec> out;
  for (int attempt = 0; attempt < attempts && static_cast<int>(out.size()) < cfg.regions_per_sample; ++attempt) {
    const int top = static_cast<int>(rng.range(0, index_a.height - s));
    const int left = static_cast<int>(rng.range(0, index_a.width - s));
    const double gr = top + (s - 1) / 2.0, gc = left + (s - 1) / 2.0;
    bool excluded = false;
    for (const auto& prev : out) excluded = excluded || prev.rect_a.contains(gr, gc);
    if (excluded) continue;
    double cr, cc;
    if (!region_center(index_a, top, left, s, cr, cc)) continue;

    double best = std::numeric_limits<double>::infinity();
    int br = -1, bc = -1;
    for (int r = 0; r < bh; ++r) {
      for (int c = 0; c < bw; ++c) {
        const size_t i = static_cast<size_t>(r) * bw + c;
        if (!bok[i]) continue;
        const double d2 = (brow[i] - cr) * (brow[i] - cr) + (bcol[i] - cc) * (bcol[i] - cc);
        if (d2 < best) {
          best = d2;
          br = r;
          bc = c;
        }
      }
    }
    if (br < 0 || std::sqrt(best) > cfg.match_tolerance) continue;
    const int raw_top = br - o, raw_left = bc - o;
    const int fit_top = std::clamp(raw_top, 0, index_b.height - s);
    const int fit_left = std::clamp(raw_left, 0, index_b.width - s);
    const int shift = std::max(std::abs(fit_top - raw_top), std::abs(fit_left - raw_left));
    if (shift > cfg.max_border_shift) continue;

    LocalRegionSpec spec;
    spec.center_row = cr;
    spec.center_col = cc;
    spec.size = s;
    spec.rect_a = {top, left, s};
    spec.rect_b = {fit_top, fit_left, s};
    spec.match_distance = std::sqrt(best);
    spec.border_shift = shift;
    out.push_back(spec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Local features

namespace {

template <typename T>
void check_region(const Tensor<T>& dense, const RegionRef& r) {
  if (r.sample < 0 || r.sample >= dense.dim(0) || r.rect.size < 1 || r.rect.top < 0 || r.rect.left < 0 ||
      r.rect.top + r.rect.size > dense.dim(2) || r.rect.left + r.rect.size > dense.dim(3)) {
    throw InvalidArgument("local region (" + std::to_string(r.rect.top) + "," + std::to_string(r.rect.left) +
                          ") size " + std::to_string(r.rect.size) + " is outside the dense map " +
                          dense.shape_str());
  }
}

}  // namespace

template <typename T>
Tensor<T> extract_local_features(const Tensor<T>& dense, const std::vector<RegionRef>& regions) {
  if (dense.ndim() != 4) throw InvalidArgument("local features expect an (N, C, H, W) dense map");
  const int C = dense.dim(1);
  Tensor<T> out({static_cast<int>(regions.size()), C});
  for (size_t j = 0; j < regions.size(); ++j) {
    const RegionRef& r = regions[j];
    check_region(dense, r);
    const double area = static_cast<double>(r.rect.size) * r.rect.size;
    for (int c = 0; c < C; ++c) {
      double sum = 0;
      for (int y = r.rect.top; y < r.rect.top + r.rect.size; ++y) {
        const T* row = &dense.at(r.sample, c, y, r.rect.left);
        for (int x = 0; x < r.rect.size; ++x) sum += row[x];
      }
      out[j * C + c] = static_cast<T>(sum / area);
    }
  }
  return out;
}

template <typename T>
void extract_local_features_backward(const Tensor<T>& d_features, const std::vector<RegionRef>& regions,
                                     Tensor<T>& d_dense) {
  const int C = d_dense.dim(1);
  if (d_features.ndim() != 2 || d_features.dim(0) != static_cast<int>(regions.size()) || d_features.dim(1) != C) {
    throw InvalidArgument("local feature gradient shape mismatch");
  }
  for (size_t j = 0; j < regions.size(); ++j) {
    const RegionRef& r = regions[j];
    check_region(d_dense, r);
    const double area = static_cast<double>(r.rect.size) * r.rect.size;
    for (int c = 0; c < C; ++c) {
      const T g = static_cast<T>(d_features[j * C + c] / area);
      for (int y = r.rect.top; y < r.rect.top + r.rect.size; ++y) {
        T* row = &d_dense.at(r.sample, c, y, r.rect.left);
        for (int x = 0; x < r.rect.size; ++x) row[x] += g;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Losses

template <typename T>
HeadLoss<T> projected_contrastive_loss(const Tensor<T>& features, ProjectionHead<T>& head,
                                       const ContrastiveConfig& cfg, double weight, bool with_grad) {
  if (features.ndim() != 2 || features.dim(0) % 2 != 0) {
    throw InvalidArgument("contrastive features must be a two-view (2n, D) matrix");
  }
  if (features.dim(1) != head.input_dim()) {
    throw InvalidArgument("feature dim " + std::to_string(features.dim(1)) + " does not match head input dim " +
                          std::to_string(head.input_dim()));
  }
  const int n = features.dim(0) / 2;
  const Tensor<T> z = head.forward(features, with_grad);
  const int D = z.dim(1);
  std::vector<double> zd(z.values().begin(), z.values().end());
  const EmbeddingBatch batch = EmbeddingBatch::two_views(std::move(zd), n, D);
  HeadLoss<T> out;
  if (!with_grad) {
    out.loss = nt_xent_loss(batch, cfg);
    return out;
  }
  const ContrastiveResult r = nt_xent_loss_with_grad(batch, cfg);
  out.loss = r.loss;
  Tensor<T> dz(z.shape());
  for (size_t i = 0; i < dz.size(); ++i) dz[i] = static_cast<T>(weight * r.grad[i]);
  out.d_input = head.backward(dz);
  return out;
}

template <typename T>
HeadLoss<T> global_style_loss(const Tensor<T>& encoder_maps, ProjectionHead<T>& head, const ContrastiveConfig& cfg,
                              bool use_style, StyleMode mode, double weight, bool with_grad) {
  const Tensor<T> style = extract_style(encoder_maps, use_style, mode);
  HeadLoss<T> out = projected_contrastive_loss(style, head, cfg, weight, with_grad);
  if (with_grad) out.d_input = extract_style_backward(encoder_maps, out.d_input, use_style, mode);
  return out;
}

template <typename T>
HeadLoss<T> local_matching_loss(const Tensor<T>& local_features, ProjectionHead<T>& head,
                                const ContrastiveConfig& cfg, double weight, bool with_grad) {
  if (local_features.ndim() != 2 || local_features.dim(0) % 2 != 0) {
    throw InvalidArgument("local features must be a two-view (2R, C) matrix");
  }
  if (local_features.dim(0) < 4) {
    HeadLoss<T> out;
    out.skipped = true;
    if (with_grad) out.d_input = Tensor<T>(local_features.shape());
    return out;
  }
  return projected_contrastive_loss(local_features, head, cfg, weight, with_grad);
}

double total_loss(double global, double local, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  return lambda * global + (1.0 - lambda) * local;
}

// ---------------------------------------------------------------------------
// Configuration

void GLCNetConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (noglobe && nolocal) throw InvalidArgument("noglobe and nolocal together leave no training objective");
  contrastive.validate();
  if (view_size < 1) throw InvalidArgument("view size must be >= 1");
  local.validate(view_size, view_size);
  if (batch_size < 2) throw InvalidArgument("batch size must be >= 2 (contrastive negatives)");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (max_steps < 0) throw InvalidArgument("max_steps must be >= 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

double GLCNetConfig::global_weight() const {
  if (noglobe) return 0.0;
  return nolocal ? 1.0 : lambda;
}

double GLCNetConfig::local_weight() const {
  if (nolocal) return 0.0;
  return noglobe ? 1.0 : 1.0 - lambda;
}

double GLCNetConfig::combine(double global, double local) const {
  if (noglobe) return local;
  if (nolocal) return global;
  return total_loss(global, local, lambda);
}

// ---------------------------------------------------------------------------
// Training step

std::vector<std::string> pretrain_groups() {
  return {"encoder", "decoder.1", "decoder.2", "decoder.3", "proj_global", "proj_local"};
}

Tensor<float> stack_views(const std::vector<View>& views) {
  if (views.empty()) throw InvalidArgument("no views to stack");
  const Image& first = views.front().image;
  Tensor<float> x({static_cast<int>(views.size()), first.channels, first.height, first.width});
  for (size_t i = 0; i < views.size(); ++i) {
    const Image& im = views[i].image;
    if (im.channels != first.channels || im.height != first.height || im.width != first.width) {
      throw InvalidArgument("views in a batch must share channels and size");
    }
    std::copy(im.data.begin(), im.data.end(), x.slice(static_cast<int>(i)));
  }
  return x;
}

PretrainStep::PretrainStep(EncoderDecoderModel<float>& model, const GLCNetConfig& cfg)
    : model_(model), cfg_(cfg), adam_(model.trainable_parameters(pretrain_groups())) {
  cfg_.validate();
  if (model.config().style_features == cfg_.nostyle) {
    throw InvalidArgument("model global head width does not match the nostyle setting");
  }
}

StepResult PretrainStep::run(const std::vector<View>& views, const std::vector<std::vector<LocalRegionSpec>>& regions,
                             double lr, bool apply) {
  if (views.size() % 2 != 0 || views.size() / 2 != regions.size()) {
    throw InvalidArgument("step needs 2n views and n region lists");
  }
  const int n = static_cast<int>(regions.size());
  StepResult res;
  model_.zero_grad();
  const Tensor<float> x = stack_views(views);
  auto enc = model_.forward_encoder(x, true, true);
  Tensor<float> d_features(enc.features.shape());
  Tensor<float> d_low;

  if (!cfg_.noglobe) {
    auto g = global_style_loss(enc.features, model_.proj_global, cfg_.contrastive, !cfg_.nostyle, cfg_.style_mode,
                               cfg_.global_weight(), true);
    res.report.global = g.loss;
    for (size_t i = 0; i < d_features.size(); ++i) d_features[i] += g.d_input[i];
  }
  if (!cfg_.nolocal) {
    std::vector<RegionRef> refs_a, refs_b;
    for (int i = 0; i < n; ++i) {
      for (const auto& spec : regions[static_cast<size_t>(i)]) {
        refs_a.push_back({i, spec.rect_a});
        refs_b.push_back({n + i, spec.rect_b});
      }
    }
    res.report.regions = static_cast<int64_t>(refs_a.size());
    if (refs_a.size() >= 2) {
      std::vector<RegionRef> refs = refs_a;
      refs.insert(refs.end(), refs_b.begin(), refs_b.end());
      const Tensor<float> dense = model_.forward_decoder(enc, true, true);
      const Tensor<float> feats = extract_local_features(dense, refs);
      auto l = local_matching_loss(feats, model_.proj_local, cfg_.contrastive, cfg_.local_weight(), true);
      res.report.local = l.loss;
      Tensor<float> d_dense(dense.shape());
      extract_local_features_backward(l.d_input, refs, d_dense);
      auto eg = model_.backward_decoder(d_dense);
      for (size_t i = 0; i < d_features.size(); ++i) d_features[i] += eg.features[i];
      d_low = std::move(eg.low_level);
    } else {
      res.local_skipped = true;
    }
  }
  res.report.total = cfg_.combine(res.report.global, res.report.local);
  if (!std::isfinite(res.report.total)) throw NumericError("pretraining loss is not finite");
  model_.backward_encoder(d_features, d_low);
  if (apply) adam_.step(lr);
  res.report.lr = lr;
  return res;
}

// ---------------------------------------------------------------------------
// Loop

std::string loss_csv(const std::vector<LossReport>& rows) {
  std::string out = "epoch,step,L_G,L_L,L_total,lr\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + format_double(r.global) + "," +
           format_double(r.local) + "," + format_double(r.total) + "," + format_double(r.lr) + "\n";
  }
  return out;
}

namespace {

std::string steps_csv(const std::vector<LossReport>& rows) {
  std::string out = "epoch,step,L_G,L_L,L_total,lr,regions\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + format_double(r.global) + "," +
           format_double(r.local) + "," + format_double(r.total) + "," + format_double(r.lr) + "," +
           std::to_string(r.regions) + "\n";
  }
  return out;
}

}  // namespace

PretrainResult run_pretraining(EncoderDecoderModel<float>& model, const PretrainJob& job) {
  const GLCNetConfig& cfg = job.cfg;
  cfg.validate();
  job.t1.validate();
  job.t2.validate();
  if (job.t1.output_size != cfg.view_size || job.t2.output_size != cfg.view_size) {
    throw InvalidArgument("augmentation output size must equal the configured view size");
  }
  const size_t count = job.manifest.entries.size();
  if (count < 2) throw InvalidArgument("pretraining needs at least 2 tiles, manifest has " + std::to_string(count));
  const int N = static_cast<int>(std::min<size_t>(static_cast<size_t>(cfg.batch_size), count));
  const size_t steps_per_epoch = count / static_cast<size_t>(N);
  const int in_channels = model.config().in_channels;

  PretrainStep step(model, cfg);
  PretrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  int64_t global_step = 0;
  bool stop = false;

  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    const double lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
    std::vector<size_t> order(count);
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(Rng::derive(cfg.seed, "pretrain.shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    LossReport sum;
    int done = 0;
    for (size_t s = 0; s < steps_per_epoch; ++s) {
      if (cfg.max_steps > 0 && global_step >= cfg.max_steps) {
        stop = true;
        break;
      }
      std::vector<View> views(2 * static_cast<size_t>(N));
      std::vector<std::vector<LocalRegionSpec>> regions(static_cast<size_t>(N));
      parallel_for(static_cast<size_t>(N), cfg.threads, [&](size_t i) {
        const size_t pos = s * static_cast<size_t>(N) + i;
        const ManifestEntry& e = job.manifest.entries[order[pos]];
        const Image img = read_image(resolve_entry(job.manifest_dir, e.tile_path));
        if (img.channels != in_channels) {
          throw InvalidArgument("tile " + e.tile_path + " has " + std::to_string(img.channels) +
                                " bands, model expects " + std::to_string(in_channels));
        }
        Rng aug(Rng::derive(cfg.seed, "pretrain.augment", static_cast<uint64_t>(epoch), pos));
        ViewPair pair = make_view_pair(img, order[pos], job.t1, job.t2, aug);
        if (!cfg.nolocal) {
          Rng sel(Rng::derive(cfg.seed, "pretrain.regions", static_cast<uint64_t>(epoch), pos));
          regions[i] = select_local_regions(pair.view_a.index, pair.view_b.index, cfg.local, sel);
        }
        views[i] = std::move(pair.view_a);
        views[static_cast<size_t>(N) + i] = std::move(pair.view_b);
      });
      StepResult r;
      try {
        r = step.run(views, regions, lr);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(global_step));
      }
      r.report.epoch = epoch;
      r.report.step = global_step;
      if (r.local_skipped) ++result.local_skips;
      result.steps.push_back(r.report);
      sum.global += r.report.global;
      sum.local += r.report.local;
      sum.regions += r.report.regions;
      ++done;
      ++global_step;
    }
    if (done == 0) break;
    LossReport row;
    row.epoch = epoch;
    row.step = global_step - 1;
    row.global = sum.global / done;
    row.local = sum.local / done;
    row.total = cfg.combine(row.global, row.local);
    row.lr = lr;
    row.regions = sum.regions;
    result.epochs.push_back(row);
    log_info("pretrain epoch " + std::to_string(epoch) + ": L_G " + format_double(row.global) + ", L_L " +
             format_double(row.local) + ", total " + format_double(row.total));

    if (row.total < result.best_loss) {
      result.best_loss = row.total;
      result.best_epoch = epoch;
      auto meta = job.metadata;
      meta["epoch"] = std::to_string(epoch);
      meta["loss"] = format_double(row.total);
      meta["seed"] = std::to_string(cfg.seed);
      result.best = capture_checkpoint(model, meta);
      if (!job.out_dir.empty()) save_checkpoint(job.out_dir / "best.ckpt", result.best);
    }
  }
  if (!job.out_dir.empty()) {
    write_file_atomic(job.out_dir / "loss.csv", loss_csv(result.epochs));
    write_file_atomic(job.out_dir / "steps.csv", steps_csv(result.steps));
  }
  return result;
}

// ---------------------------------------------------------------------------

template Tensor<float> extract_style(const Tensor<float>&, bool, StyleMode);
template Tensor<double> extract_style(const Tensor<double>&, bool, StyleMode);
template Tensor<float> extract_style_backward(const Tensor<float>&, const Tensor<float>&, bool, StyleMode);
template Tensor<double> extract_style_backward(const Tensor<double>&, const Tensor<double>&, bool, StyleMode);
template Tensor<float> extract_local_features(const Tensor<float>&, const std::vector<RegionRef>&);
template Tensor<double> extract_local_features(const Tensor<double>&, const std::vector<RegionRef>&);
template void extract_local_features_backward(const Tensor<float>&, const std::vector<RegionRef>&, Tensor<float>&);
template void extract_local_features_backward(const Tensor<double>&, const std::vector<RegionRef>&,
                                              Tensor<double>&);
template HeadLoss<float> projected_contrastive_loss(const Tensor<float>&, ProjectionHead<float>&,
                                                    const ContrastiveConfig&, double, bool);
template HeadLoss<double> projected_contrastive_loss(const Tensor<double>&, ProjectionHead<double>&,
                                                     const ContrastiveConfig&, double, bool);
template HeadLoss<float> global_style_loss(const Tensor<float>&, ProjectionHead<float>&, const ContrastiveConfig&,
                                           bool, StyleMode, double, bool);
template HeadLoss<double> global_style_loss(const Tensor<double>&, ProjectionHead<double>&,
                                            const ContrastiveConfig&, bool, StyleMode, double, bool);
template HeadLoss<float> local_matching_loss(const Tensor<float>&, ProjectionHead<float>&, const ContrastiveConfig&,
                                             double, bool);
template HeadLoss<double> local_matching_loss(const Tensor<double>&, ProjectionHead<double>&,
                                              const ContrastiveConfig&, double, bool);

}  // namespace glcnet
