// Acceptance suite: one PASS/FAIL line per criterion.
//   glcnet_acceptance [--criteria 1-8|9-12|all] [--work DIR] [--seeds N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glcnet/commands.hpp"
#include "glcnet/error.hpp"
#include "glcnet/util.hpp"
#include "oracles.hpp"

using namespace glcnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1-3: contrastive losses

Outcome criterion_1() {
  const auto t0 = Clock::now();
  Rng rng(101);
  const double taus[] = {0.1, 0.5, 1.0};
  double worst = 0;
  int batches = 0;
  for (int b = 0; b < 50; ++b) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const int dim = 1 + static_cast<int>(rng.below(16));
    std::vector<double> v(static_cast<size_t>(2 * n * dim));
    for (auto& x : v) x = rng.normal();
    const auto batch = EmbeddingBatch::two_views(v, n, dim);
    for (double tau : taus) {
      for (bool inc : {false, true}) {
        const double got = nt_xent_loss(batch, {tau, inc});
        const double want = oracle::nt_xent(v, 2 * n, dim, oracle::two_view_pairs(n), tau, inc);
        worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
      }
    }
    ++batches;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0,
          std::to_string(batches) + " batches x 3 tau x 2 modes, max rel err " + fmt("%.2e", worst) + ", " +
              fmt("%.3f", secs) + " s"};
}

Outcome criterion_2() {
  double worst = 0;
  for (int n : {2, 4, 8}) {
    Rng rng(static_cast<uint64_t>(n));
    std::vector<double> one(5);
    for (auto& x : one) x = rng.normal();
    std::vector<double> v;
    for (int i = 0; i < 2 * n; ++i) v.insert(v.end(), one.begin(), one.end());
    const double loss = nt_xent_loss(EmbeddingBatch::two_views(v, n, 5), {});
    worst = std::max(worst, std::abs(loss - std::log(2.0 * (n - 1))));
  }
  return {worst <= 1e-9, "N in {2,4,8}, max |L - log(2(N-1))| = " + fmt("%.2e", worst)};
}

double rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0, den = 0;
  for (size_t i = 0; i < got.size(); ++i) {
    num = std::max(num, std::abs(got[i] - want[i]));
    den = std::max(den, std::abs(want[i]));
  }
  return num / std::max(den, 1e-12);
}

Outcome criterion_3() {
  double worst_g = 0, worst_l = 0;
  const double h = 1e-5;
  for (int f = 0; f < 10; ++f) {
    Rng rng(300 + f);
    const int n = 2 + f % 3, C = 3 + f % 2, hw = 3;
    ContrastiveConfig cc{f % 2 ? 0.2 : 0.5, f % 3 == 0};
    const StyleMode mode = f % 4 == 3 ? StyleMode::kStd : StyleMode::kVariance;

    // global: feature maps -> style -> g -> NT-Xent
    ProjectionHead<double> g("proj_global", 2 * C, 32, 6);
    g.init(rng);
    Tensor<double> maps({2 * n, C, hw, hw});
    for (auto& x : maps.storage()) x = rng.normal();
    const auto res = global_style_loss(maps, g, cc, true, mode, 1.0, true);
    std::vector<double> fd(maps.size());
    for (size_t i = 0; i < maps.size(); ++i) {
      auto p = maps, m = maps;
      p[i] += h;
      m[i] -= h;
      fd[i] = (global_style_loss(p, g, cc, true, mode, 1.0, false).loss -
               global_style_loss(m, g, cc, true, mode, 1.0, false).loss) /
              (2 * h);
    }
    worst_g = std::max(worst_g, rel_err(res.d_input.storage(), fd));

    // local: region features -> g_L -> NT-Xent
    const int R = 2 + f % 4, D = 4;
    ProjectionHead<double> gl("proj_local", D, 32, 5);
    gl.init(rng);
    Tensor<double> feats({2 * R, D});
    for (auto& x : feats.storage()) x = rng.normal();
    const auto lr = local_matching_loss(feats, gl, cc, 1.0, true);
    std::vector<double> fdl(feats.size());
    for (size_t i = 0; i < feats.size(); ++i) {
      auto p = feats, m = feats;
      p[i] += h;
      m[i] -= h;
      fdl[i] = (local_matching_loss(p, gl, cc, 1.0, false).loss - local_matching_loss(m, gl, cc, 1.0, false).loss) /
               (2 * h);
    }
    worst_l = std::max(worst_l, rel_err(lr.d_input.storage(), fdl));
  }
  return {worst_g <= 1e-4 && worst_l <= 1e-4,
          "10 fixtures, max rel err L_G " + fmt("%.2e", worst_g) + ", L_L " + fmt("%.2e", worst_l)};
}

// ---------------------------------------------------------------------------
// 4: index labels

// Center in original coordinates, computed from the rect alone.
bool original_center(const IndexLabel& idx, const RegionRect& r, double& row, double& col) {
  std::vector<std::pair<int, int>> px;
  if (r.size % 2) {
    px.push_back({r.top + r.size / 2, r.left + r.size / 2});
  } else {
    for (int dr : {0, 1})
      for (int dc : {0, 1}) px.push_back({r.top + r.size / 2 - 1 + dr, r.left + r.size / 2 - 1 + dc});
  }
  row = col = 0;
  for (auto [y, x] : px) {
    if (!idx.is_valid(y, x)) return false;
    row += idx.row(y, x);
    col += idx.col(y, x);
  }
  row /= static_cast<double>(px.size());
  col /= static_cast<double>(px.size());
  return true;
}

struct MatchStats {
  int pairs = 0;
  int regions = 0;
  double max_dist = 0;
  int outside = 0;
  int exclusion_violations = 0;
  int invalid = 0;
};

MatchStats match_run(bool resize, int view, uint64_t seed) {
  RunConfig cfg = RunConfig::load("configs/desk.cfg");
  cfg.crop.resize = resize;
  cfg.glc.view_size = view;
  const auto t1 = cfg.t1();
  const auto t2 = cfg.t2();
  const auto lc = cfg.glc.local;
  Image tile(3, 64, 64);
  Rng fill(seed);
  for (auto& v : tile.data) v = static_cast<float>(fill.uniform());
  MatchStats st;
  Rng rng(seed);
  for (int p = 0; p < 1000; ++p) {
    const auto pair = make_view_pair(tile, static_cast<uint64_t>(p), t1, t2, rng);
    const auto regions = select_local_regions(pair.view_a.index, pair.view_b.index, lc, rng);
    ++st.pairs;
    for (size_t i = 0; i < regions.size(); ++i) {
      const auto& s = regions[i];
      ++st.regions;
      for (const auto* r : {&s.rect_a, &s.rect_b}) {
        if (r->top < 0 || r->left < 0 || r->top + r->size > view || r->left + r->size > view) ++st.outside;
      }
      double ar, ac, br, bc;
      if (!original_center(pair.view_a.index, s.rect_a, ar, ac) ||
          !original_center(pair.view_b.index, s.rect_b, br, bc)) {
        ++st.invalid;
        continue;
      }
      st.max_dist = std::max(st.max_dist, std::hypot(ar - br, ac - bc));
      const double gr = s.rect_a.top + (s.rect_a.size - 1) / 2.0, gc = s.rect_a.left + (s.rect_a.size - 1) / 2.0;
      for (size_t j = 0; j < i; ++j) {
        const auto& q = regions[j].rect_a;
        if (gr >= q.top && gr <= q.top + q.size - 1 && gc >= q.left && gc <= q.left + q.size - 1) {
          ++st.exclusion_violations;
        }
      }
    }
  }
  return st;
}

Outcome criterion_4() {
  const auto a = match_run(true, 64, 41);
  const auto b = match_run(false, 48, 42);
  const bool ok = a.max_dist <= 1.0 && b.max_dist == 0.0 && a.exclusion_violations == 0 &&
                  b.exclusion_violations == 0 && a.outside == 0 && b.outside == 0 && a.invalid == 0 &&
                  b.invalid == 0 && a.regions > 0 && b.regions > 0;
  return {ok, "resize: " + std::to_string(a.regions) + " regions / 1000 pairs, max " + fmt("%.3f", a.max_dist) +
                  " px; no resize: " + std::to_string(b.regions) + " regions, max " + fmt("%.3f", b.max_dist) +
                  " px; exclusion violations " + std::to_string(a.exclusion_violations + b.exclusion_violations)};
}

// ---------------------------------------------------------------------------
// 5: style vectors

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return 1.0 - ab / std::sqrt(aa * bb);
}

Outcome criterion_5() {
  const int C = 4, H = 6, W = 6;
  std::vector<double> flat(C * H * W), textured(C * H * W);
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H; ++r)
      for (int q = 0; q < W; ++q) {
        const double m = 0.2 + 0.1 * c;
        flat[(c * H + r) * W + q] = m;
        textured[(c * H + r) * W + q] = m + ((r + q) % 2 ? 0.3 : -0.3);
      }
  const auto sf = extract_style(flat, C, H, W);
  const auto st = extract_style(textured, C, H, W);
  double max_var = 0;
  for (int c = 0; c < C; ++c) max_var = std::max(max_var, std::abs(sf[C + c]));
  const bool zero_var = max_var <= 1e-15;

  Tensor<double> batch({2, C, H, W});
  std::copy(flat.begin(), flat.end(), batch.slice(0));
  std::copy(textured.begin(), textured.end(), batch.slice(1));
  const auto gap = extract_style(batch, false);
  double gap_diff = 0;
  for (int c = 0; c < C; ++c) gap_diff = std::max(gap_diff, std::abs(gap[c] - gap[C + c]));
  const double sep = cosine_distance(sf, st);
  return {zero_var && gap_diff < 1e-15 && sep > 1e-3,
          std::string("constant maps max variance ") + fmt("%.1e", max_var) + ", nostyle diff " +
              fmt("%.1e", gap_diff) + ", style cosine distance " + fmt("%.4f", sep)};
}

// ---------------------------------------------------------------------------
// 6: gradient routing

Outcome criterion_6() {
  const RunConfig desk = RunConfig::load("configs/desk.cfg");
  const auto t1 = desk.t1();
  const auto t2 = desk.t2();
  Rng rng(6);
  const int n = 4;
  std::vector<View> va, vb;
  std::vector<std::vector<LocalRegionSpec>> regions;
  for (int i = 0; i < n; ++i) {
    Image img(3, 64, 64);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    auto pair = make_view_pair(img, i, t1, t2, rng);
    regions.push_back(select_local_regions(pair.view_a.index, pair.view_b.index, desk.glc.local, rng));
    va.push_back(pair.view_a);
    vb.push_back(pair.view_b);
  }
  std::vector<View> views = va;
  views.insert(views.end(), vb.begin(), vb.end());

  auto max_abs = [](EncoderDecoderModel<float>& m, const std::vector<std::string>& groups, bool grads) {
    float g = 0;
    for (auto* p : m.trainable_parameters(groups))
      for (float v : grads ? p->grad.storage() : p->value.storage()) g = std::max(g, std::abs(v));
    return g;
  };

  std::string detail;
  bool ok = true;
  {
    auto cfg = desk;
    cfg.glc.nolocal = true;
    EncoderDecoderModel<float> m(cfg.resolved_network());
    m.init(1);
    EncoderDecoderModel<float> before(cfg.resolved_network());
    before.init(1);
    PretrainStep step(m, cfg.resolved_glcnet());
    step.run(views, regions, 0.01);
    const float dec = max_abs(m, {"decoder.1", "decoder.2", "decoder.3"}, true);
    const float enc = max_abs(m, {"encoder"}, true);
    bool unchanged = true;
    auto pa = m.trainable_parameters({"decoder.1", "decoder.2", "decoder.3"});
    auto pb = before.trainable_parameters({"decoder.1", "decoder.2", "decoder.3"});
    for (size_t i = 0; i < pa.size(); ++i) unchanged = unchanged && pa[i]->value == pb[i]->value;
    ok = ok && dec == 0.0f && enc > 0.0f && unchanged;
    detail += "nolocal: max |grad decoder| = " + fmt("%g", dec) + (unchanged ? " (weights unchanged)" : " (MOVED)");
  }
  {
    auto cfg = desk;
    cfg.glc.noglobe = true;
    EncoderDecoderModel<float> m(cfg.resolved_network());
    m.init(1);
    PretrainStep step(m, cfg.resolved_glcnet());
    const auto r = step.run(views, regions, 0.01);
    const float g = max_abs(m, {"proj_global"}, true);
    const float dec = max_abs(m, {"decoder.1"}, true);
    ok = ok && g == 0.0f && dec > 0.0f && !r.local_skipped;
    detail += "; noglobe: max |grad proj_global| = " + fmt("%g", g);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 7: metrics

Outcome criterion_7() {
  const auto m = compute_metrics(ConfusionMatrix(2, {40, 10, 20, 30}));
  double worst = std::max({std::abs(m.oa - 0.70), std::abs(m.kappa - 0.40), std::abs(m.f1[0] - 8.0 / 11.0),
                           std::abs(m.f1[1] - 2.0 / 3.0)});
  const bool worked = worst <= 1e-12 && std::abs(m.f1[0] - 0.7273) < 5e-5 && std::abs(m.f1[1] - 0.6667) < 5e-5;
  double worst_rand = 0;
  Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + static_cast<int>(rng.below(6));
    std::vector<std::vector<long long>> raw(k, std::vector<long long>(k));
    std::vector<int64_t> counts;
    for (auto& row : raw)
      for (auto& v : row) {
        v = static_cast<long long>(rng.below(1000));
        counts.push_back(v);
      }
    const auto got = compute_metrics(ConfusionMatrix(k, counts));
    const auto want = oracle::scores(raw);
    worst_rand = std::max({worst_rand, std::abs(got.oa - want.oa), std::abs(got.kappa - want.kappa)});
    for (int c = 0; c < k; ++c) worst_rand = std::max(worst_rand, std::abs(got.f1[c] - want.f1[c]));
  }
  return {worked && worst_rand <= 1e-12, "worked example err " + fmt("%.1e", worst) + ", 20 random matrices err " +
                                             fmt("%.1e", worst_rand)};
}

// ---------------------------------------------------------------------------
// 8: loss composition

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& line : split(read_text_file(p), '\n')) {
    if (!line.empty()) rows.push_back(split(line, ','));
  }
  return rows;
}

RunConfig small_fixture_config(const fs::path& work) {
  RunConfig cfg = RunConfig::load("configs/desk.cfg");
  cfg.synth.scene_size = 256;
  cfg.synth.num_scenes = 3;
  cfg.test_fraction = 0.34;
  cfg.glc.epochs = 2;
  cfg.schedule.epochs = 2;
  cfg.label_fraction = 0.1;
  (void)work;
  return cfg;
}

fs::path ensure_tiles(const RunConfig& cfg, const fs::path& dir) {
  if (!fs::exists(dir / "tiles" / "pretrain.txt")) {
    cmd_synth(cfg, dir / "scenes");
    cmd_tile(cfg, dir / "scenes", dir / "tiles");
  }
  return dir / "tiles";
}

Outcome criterion_8(const fs::path& work) {
  const auto cfg = small_fixture_config(work);
  const auto tiles = ensure_tiles(cfg, work / "c8");
  fs::remove_all(work / "c8" / "pre");
  const auto r = cmd_pretrain(cfg, tiles, work / "c8" / "pre");
  double worst = 0;
  size_t rows = 0;
  for (const auto* set : {&r.steps, &r.epochs}) {
    for (const auto& row : *set) {
      worst = std::max(worst, std::abs(row.total - (0.5 * row.global + 0.5 * row.local)));
      ++rows;
    }
  }
  for (const auto& file : {"loss.csv", "steps.csv"}) {
    const auto csv = read_csv(work / "c8" / "pre" / file);
    for (size_t i = 1; i < csv.size(); ++i) {
      const double g = std::stod(csv[i][2]), l = std::stod(csv[i][3]), t = std::stod(csv[i][4]);
      worst = std::max(worst, std::abs(t - (0.5 * g + 0.5 * l)));
      ++rows;
    }
  }
  bool local_nonzero = false;
  for (const auto& row : r.steps) local_nonzero = local_nonzero || row.local != 0.0;
  return {worst <= 1e-9 && rows > 0 && local_nonzero,
          std::to_string(rows) + " rows (in-memory + CSV), max |L_total - (L_G + L_L)/2| = " + fmt("%.1e", worst)};
}

// ---------------------------------------------------------------------------
// 9-12: desk-scale runs

struct E2E {
  fs::path work;
  int seeds = 3;
  std::string tag;  // run subdirectory; determinism repeats under a second tag
};

RunConfig e2e_config() {
  RunConfig cfg = RunConfig::load("configs/desk.cfg");
  cfg.synth.scene_size = 1024;
  cfg.synth.num_scenes = 10;
  cfg.test_fraction = 0.2;
  cfg.test_limit = 512;
  cfg.label_fraction = 0.01;
  cfg.synth.color_spread = 0.1;
  cfg.glc.epochs = 30;
  cfg.glc.batch_size = 32;
  cfg.glc.lr = 0.001;
  cfg.schedule.epochs = 30;
  cfg.schedule.batch_size = 4;
  return cfg;
}

struct SeedResult {
  uint64_t seed;
  double kappa_pre, kappa_rand;
};

std::vector<SeedResult> run_e2e(const E2E& e, double& secs, size_t& tiles) {
  const auto t0 = Clock::now();
  auto base = e2e_config();
  const auto tile_dir = ensure_tiles(base, e.work / "e2e");
  tiles = read_manifest(tile_dir / "pretrain.txt", Split::kPretrain).entries.size();
  std::vector<SeedResult> out;
  for (int s = 0; s < e.seeds; ++s) {
    auto cfg = base;
    cfg.seed = 100 + static_cast<uint64_t>(s);
    const fs::path run = e.work / e.tag / ("seed" + std::to_string(cfg.seed));
    fs::remove_all(run);
    cmd_pretrain(cfg, tile_dir, run / "pretrain");
    const auto pre = cmd_finetune(cfg, tile_dir, run / "pretrain" / "best.ckpt", run / "finetune");
    auto rcfg = cfg;
    rcfg.load_groups.clear();
    const auto rnd = cmd_finetune(rcfg, tile_dir, {}, run / "random");
    out.push_back({cfg.seed, pre.metrics.kappa, rnd.metrics.kappa});
  }
  secs = seconds_since(t0);
  return out;
}

Outcome criterion_9(const E2E& e) {
  double secs = 0;
  size_t tiles = 0;
  const auto res = run_e2e(e, secs, tiles);
  int wins = 0;
  double mean = 0;
  std::string detail;
  for (const auto& r : res) {
    wins += r.kappa_pre >= r.kappa_rand ? 1 : 0;
    mean += (r.kappa_pre - r.kappa_rand) / static_cast<double>(res.size());
    detail += "seed " + std::to_string(r.seed) + ": " + fmt("%.4f", r.kappa_pre) + " vs " + fmt("%.4f", r.kappa_rand) +
              "; ";
  }
  const bool ok = tiles >= 2000 && wins * 3 >= 2 * static_cast<int>(res.size()) && mean > 0 && secs <= 1800;
  return {ok, std::to_string(tiles) + " pretrain tiles; Kappa GLCNet vs random: " + detail + "wins " +
                  std::to_string(wins) + "/" + std::to_string(res.size()) + ", mean gain " + fmt("%+.4f", mean) +
                  ", " + fmt("%.0f", secs) + " s"};
}

RunConfig fixture_for_ablation() {
  RunConfig cfg = RunConfig::load("configs/desk.cfg");
  cfg.synth.scene_size = 256;
  cfg.synth.num_scenes = 4;
  cfg.test_fraction = 0.25;
  cfg.glc.epochs = 3;
  cfg.schedule.epochs = 3;
  cfg.label_fraction = 0.1;
  return cfg;
}

bool same_model(EncoderDecoderModel<float>& a, EncoderDecoderModel<float>& b) {
  auto pa = a.all_parameters(), pb = b.all_parameters();
  if (pa.size() != pb.size()) return false;
  for (size_t i = 0; i < pa.size(); ++i) {
    if (!(pa[i]->value == pb[i]->value)) return false;
  }
  return true;
}

Outcome criterion_10(const E2E& e) {
  const auto cfg = fixture_for_ablation();
  const auto tiles = ensure_tiles(cfg, e.work / "fixture");
  const fs::path out = e.work / e.tag / "ablate";
  fs::remove_all(out);
  const auto rows = cmd_ablate(cfg, tiles, out);
  const auto csv = read_csv(out / "ablation.csv");
  bool well_formed = csv.size() == 6 && csv[0].size() == 9;
  const std::vector<std::string> names{"full", "nostyle", "noglobe", "nolocal", "nostyle_and_nolocal"};
  for (size_t i = 1; well_formed && i < csv.size(); ++i) {
    well_formed = csv[i].size() == 9 && csv[i][0] == names[i - 1];
    for (size_t c = 5; well_formed && c < 9; ++c) well_formed = std::isfinite(std::stod(csv[i][c]));
  }

  RunConfig simclr = cfg;
  simclr.method = "simclr";
  const RunConfig nn = ablation_configs(cfg).back().second;
  const bool hash_eq = simclr.hash() == nn.hash();
  EncoderDecoderModel<float> ma(simclr.resolved_network()), mb(nn.resolved_network());
  ma.init(simclr.seed);
  mb.init(nn.seed);
  const bool init_eq = same_model(ma, mb);
  const fs::path sim_dir = e.work / e.tag / "simclr";
  fs::remove_all(sim_dir);
  cmd_pretrain(simclr, tiles, sim_dir);
  const bool loss_eq = read_text_file(sim_dir / "loss.csv") ==
                       read_text_file(out / "nostyle_and_nolocal" / "pretrain" / "loss.csv");
  const bool ok = rows.size() == 5 && well_formed && hash_eq && init_eq && loss_eq;
  return {ok, std::to_string(rows.size()) + " configurations, table " + (well_formed ? "well-formed" : "MALFORMED") +
                  "; simclr vs nostyle_and_nolocal: hash " + (hash_eq ? "equal" : "DIFFERENT") + ", init " +
                  (init_eq ? "identical" : "DIFFERENT") + ", pretrain loss.csv " + (loss_eq ? "identical" : "DIFFERENT")};
}

Outcome criterion_11(const E2E& e) {
  const auto cfg = fixture_for_ablation();
  const auto tiles = ensure_tiles(cfg, e.work / "fixture");
  const fs::path root = e.work / e.tag / "partial";
  fs::remove_all(root);
  cmd_pretrain(cfg, tiles, root / "pretrain");
  const auto bundle = read_checkpoint(root / "pretrain" / "best.ckpt");
  const std::vector<std::vector<std::string>> levels{
      {"encoder"}, {"encoder", "decoder.1", "decoder.2"}, {"encoder", "decoder.1", "decoder.2", "decoder.3"}};
  const std::vector<std::string> all{"encoder", "decoder.1", "decoder.2", "decoder.3", "seg_head"};
  bool ok = true;
  std::string detail;
  for (size_t l = 0; l < levels.size(); ++l) {
    auto c = cfg;
    c.load_groups = levels[l];
    const auto ft = cmd_finetune(c, tiles, root / "pretrain" / "best.ckpt", root / ("level" + std::to_string(l + 1)));
    auto model = prepare_finetune_model(c.resolved_network(), &bundle, levels[l], c.seed);
    EncoderDecoderModel<float> fresh(c.resolved_network());
    fresh.init(c.seed);
    int loaded_ok = 0, fresh_ok = 0, bad = 0;
    for (const auto& g : all) {
      const bool loaded = std::find(levels[l].begin(), levels[l].end(), g) != levels[l].end();
      ParamRefs<float> mine, ref;
      for (auto& pg : model->groups())
        if (pg.name == g) mine = pg.params;
      for (auto& pg : fresh.groups())
        if (pg.name == g) ref = pg.params;
      const GroupBlob* blob = bundle.group(g);
      for (size_t i = 0; i < mine.size(); ++i) {
        bool match;
        if (loaded) {
          const auto& t = blob->tensors.at(i);
          match = t.name == mine[i]->name &&
                  t.bytes.size() == mine[i]->value.size() * sizeof(float) &&
                  std::memcmp(t.bytes.data(), mine[i]->value.data(), t.bytes.size()) == 0;
        } else {
          match = mine[i]->value == ref[i]->value;
        }
        (match ? (loaded ? loaded_ok : fresh_ok) : bad)++;
      }
    }
    ok = ok && bad == 0 && ft.log.size() == static_cast<size_t>(c.schedule.epochs);
    detail += "level " + std::to_string(l + 1) + ": " + std::to_string(loaded_ok) + " loaded, " +
              std::to_string(fresh_ok) + " fresh, " + std::to_string(bad) + " mismatched; ";
  }
  return {ok, detail};
}

std::map<std::string, std::string> collect_csvs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& f : fs::recursive_directory_iterator(dir)) {
    if (f.is_regular_file() && f.path().extension() == ".csv") {
      out[fs::relative(f.path(), dir).string()] = read_text_file(f.path());
    }
  }
  return out;
}

Outcome criterion_12(const E2E& first) {
  E2E again = first;
  again.tag = first.tag + "_repeat";
  criterion_9(again);
  criterion_10(again);
  criterion_11(again);
  const auto a = collect_csvs(first.work / first.tag);
  const auto b = collect_csvs(again.work / again.tag);
  int diff = 0;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end() || it->second != v) ++diff;
  }
  const bool ok = !a.empty() && a.size() == b.size() && diff == 0;
  return {ok, std::to_string(a.size()) + " CSV files compared, " + std::to_string(diff) + " differ"};
}

std::set<int> parse_criteria(const std::string& s) {
  std::set<int> out;
  if (s == "all") {
    for (int i = 1; i <= 12; ++i) out.insert(i);
    return out;
  }
  for (const auto& part : split(s, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.insert(std::stoi(part));
    } else {
      for (int i = std::stoi(part.substr(0, dash)); i <= std::stoi(part.substr(dash + 1)); ++i) out.insert(i);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::string which = "all";
  E2E e;
  e.work = fs::temp_directory_path() / "glcnet_acceptance";
  e.tag = "run";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criteria" && i + 1 < argc) {
      which = argv[++i];
    } else if (a == "--work" && i + 1 < argc) {
      e.work = argv[++i];
    } else if (a == "--seeds" && i + 1 < argc) {
      e.seeds = std::stoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criteria 1-8|9-12|all] [--work DIR] [--seeds N]\n", argv[0]);
      return 2;
    }
  }
  set_verbosity(0);
  fs::create_directories(e.work);
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> table{
      {1, {"NT-Xent vs brute-force oracle", criterion_1}},
      {2, {"identical-embedding closed form", criterion_2}},
      {3, {"L_G / L_L gradient check", criterion_3}},
      {4, {"index-label correspondence", criterion_4}},
      {5, {"style-vector semantics", criterion_5}},
      {6, {"gradient routing", criterion_6}},
      {7, {"metric oracle", criterion_7}},
      {8, {"loss composition", [&] { return criterion_8(e.work); }}},
      {9, {"desk-scale end-to-end", [&] { return criterion_9(e); }}},
      {10, {"ablation harness", [&] { return criterion_10(e); }}},
      {11, {"partial loading", [&] { return criterion_11(e); }}},
      {12, {"determinism", [&] { return criterion_12(e); }}},
  };
  int failed = 0;
  for (int id : parse_criteria(which)) {
    const auto it = table.find(id);
    if (it == table.end()) continue;
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    std::printf("criterion %2d %-34s %s  %s\n", id, it->second.first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
