#include "glcnet/glcnet.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "glcnet/commands.hpp"
#include "glcnet/error.hpp"
#include "glcnet/util.hpp"

struct glc_config {
  glcnet::RunConfig cfg;
};

struct glc_metrics {
  glcnet::MetricReport report;
};

namespace {

thread_local std::string g_last_error;

glc_status fail(glc_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
glc_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return GLC_OK;
  } catch (const glcnet::Error& e) {
    return fail(static_cast<glc_status>(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(GLC_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GLC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GLC_INTERNAL, e.what());
  } catch (...) {
    return fail(GLC_INTERNAL, "unknown error");
  }
}

glc_status copy_out(const std::string& s, char* buf, size_t size, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || size == 0) return GLC_OK;
  if (size < s.size() + 1) {
    std::memcpy(buf, s.data(), size - 1);
    buf[size - 1] = '\0';
    return fail(GLC_INVALID_ARGUMENT, "buffer too small");
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return GLC_OK;
}

std::filesystem::path opt_path(const char* p) { return p ? std::filesystem::path(p) : std::filesystem::path(); }

#define GLC_REQUIRE(cond, what) \
  if (!(cond)) return fail(GLC_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* glc_last_error(void) { return g_last_error.c_str(); }

const char* glc_version(void) { return "1.0.0"; }

void glc_set_verbosity(int level) { glcnet::set_verbosity(level); }

glc_status glc_config_create(glc_config** out) {
  GLC_REQUIRE(out, "out is null");
  return guarded([&] { *out = new glc_config(); });
}

glc_status glc_config_load(const char* path, glc_config** out) {
  GLC_REQUIRE(path && out, "null argument");
  return guarded([&] { *out = new glc_config{glcnet::RunConfig::load(path)}; });
}

glc_status glc_config_parse(const char* text, glc_config** out) {
  GLC_REQUIRE(text && out, "null argument");
  return guarded([&] { *out = new glc_config{glcnet::RunConfig::parse(text)}; });
}

void glc_config_destroy(glc_config* cfg) { delete cfg; }

glc_status glc_config_set(glc_config* cfg, const char* key, const char* value) {
  GLC_REQUIRE(cfg && key && value, "null argument");
  return guarded([&] { cfg->cfg.set(key, value); });
}

glc_status glc_config_get(const glc_config* cfg, const char* key, char* buf, size_t size, size_t* needed) {
  GLC_REQUIRE(cfg && key, "null argument");
  std::string v;
  glc_status s = guarded([&] { v = cfg->cfg.get(key); });
  return s == GLC_OK ? copy_out(v, buf, size, needed) : s;
}

glc_status glc_config_validate(const glc_config* cfg) {
  GLC_REQUIRE(cfg, "config is null");
  return guarded([&] { cfg->cfg.validate(); });
}

glc_status glc_config_hash(const glc_config* cfg, uint64_t* out) {
  GLC_REQUIRE(cfg && out, "null argument");
  return guarded([&] { *out = cfg->cfg.hash(); });
}

glc_status glc_config_canonical(const glc_config* cfg, char* buf, size_t size, size_t* needed) {
  GLC_REQUIRE(cfg, "config is null");
  std::string v;
  glc_status s = guarded([&] { v = cfg->cfg.canonical(); });
  return s == GLC_OK ? copy_out(v, buf, size, needed) : s;
}

glc_status glc_cmd_synth(const glc_config* cfg, const char* out_dir) {
  GLC_REQUIRE(cfg && out_dir, "null argument");
  return guarded([&] { glcnet::cmd_synth(cfg->cfg, out_dir); });
}

glc_status glc_cmd_tile(const glc_config* cfg, const char* scene_dir, const char* out_dir) {
  GLC_REQUIRE(cfg && out_dir, "null argument");
  return guarded([&] { glcnet::cmd_tile(cfg->cfg, opt_path(scene_dir), out_dir); });
}

glc_status glc_cmd_pretrain(const glc_config* cfg, const char* manifest_dir, const char* out_dir) {
  GLC_REQUIRE(cfg && manifest_dir && out_dir, "null argument");
  return guarded([&] { glcnet::cmd_pretrain(cfg->cfg, manifest_dir, out_dir); });
}

glc_status glc_cmd_finetune(const glc_config* cfg, const char* manifest_dir, const char* checkpoint,
                            const char* out_dir, glc_metrics** metrics) {
  GLC_REQUIRE(cfg && manifest_dir && out_dir, "null argument");
  if (metrics) *metrics = nullptr;
  return guarded([&] {
    auto r = glcnet::cmd_finetune(cfg->cfg, manifest_dir, opt_path(checkpoint), out_dir);
    if (metrics) *metrics = new glc_metrics{std::move(r.metrics)};
  });
}

glc_status glc_cmd_evaluate(const glc_config* cfg, const char* manifest_dir, const char* checkpoint,
                            const char* out_dir, glc_metrics** metrics) {
  GLC_REQUIRE(cfg && manifest_dir && checkpoint && out_dir, "null argument");
  if (metrics) *metrics = nullptr;
  return guarded([&] {
    auto r = glcnet::cmd_evaluate(cfg->cfg, manifest_dir, checkpoint, out_dir);
    if (metrics) *metrics = new glc_metrics{std::move(r.metrics)};
  });
}

glc_status glc_cmd_ablate(const glc_config* cfg, const char* manifest_dir, const char* out_dir) {
  GLC_REQUIRE(cfg && manifest_dir && out_dir, "null argument");
  return guarded([&] { glcnet::cmd_ablate(cfg->cfg, manifest_dir, out_dir); });
}

glc_status glc_cmd_plot(const char* run_dir) {
  GLC_REQUIRE(run_dir, "run_dir is null");
  return guarded([&] {
    for (const auto& p : glcnet::cmd_plot(run_dir)) glcnet::log_info("plot: wrote " + p.string());
  });
}

glc_status glc_metrics_summary(const glc_metrics* m, double* oa, double* kappa, double* macro_f1) {
  GLC_REQUIRE(m, "metrics is null");
  if (oa) *oa = m->report.oa;
  if (kappa) *kappa = m->report.kappa;
  if (macro_f1) *macro_f1 = m->report.macro_f1;
  return GLC_OK;
}

int glc_metrics_num_classes(const glc_metrics* m) { return m ? static_cast<int>(m->report.f1.size()) : 0; }

glc_status glc_metrics_class(const glc_metrics* m, int c, double* f1, int64_t* support) {
  GLC_REQUIRE(m, "metrics is null");
  GLC_REQUIRE(c >= 0 && c < static_cast<int>(m->report.f1.size()), "class index out of range");
  if (f1) *f1 = m->report.f1[c];
  if (support) *support = m->report.support[c];
  return GLC_OK;
}

void glc_metrics_destroy(glc_metrics* m) { delete m; }

}  // extern "C"
