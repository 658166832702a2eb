#include "glcnet/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <set>

#include "glcnet/error.hpp"
#include "glcnet/util.hpp"

namespace glcnet {

namespace {

struct KeyDef {
  std::string section;
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename I>
I parse_integer(const std::string& v) {
  I out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || v.empty()) throw InvalidArgument("'" + v + "' is not a valid integer");
  return out;
}

double parse_real(const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw InvalidArgument("'" + v + "' is not a valid number");
  }
  return d;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidArgument("'" + v + "' is not a boolean (true/false)");
}

std::vector<std::string> parse_words(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) {
    const std::string w = trim(part);
    if (w.empty()) throw InvalidArgument("empty item in list '" + v + "'");
    out.push_back(w);
  }
  return out;
}

template <typename I>
std::vector<I> parse_int_list(const std::string& v) {
  std::vector<I> out;
  for (const auto& w : parse_words(v)) out.push_back(parse_integer<I>(w));
  return out;
}

std::vector<double> parse_real_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& w : parse_words(v)) out.push_back(parse_real(w));
  return out;
}

template <typename V>
std::string list_str(const std::vector<V>& v) {
  std::vector<std::string> parts;
  for (const auto& x : v) {
    if constexpr (std::is_same_v<V, std::string>) {
      parts.push_back(x);
    } else if constexpr (std::is_floating_point_v<V>) {
      parts.push_back(format_double(x));
    } else {
      parts.push_back(std::to_string(x));
    }
  }
  return join(parts, ",");
}

std::string real_str(double v) { return format_double(v); }
std::string real_str(float v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

#define GLC_INT(sec, key, field, type)                                               \
  KeyDef {                                                                           \
    sec, key, [](const RunConfig& c) { return std::to_string(c.field); },            \
        [](RunConfig& c, const std::string& v) { c.field = parse_integer<type>(v); } \
  }
#define GLC_REAL(sec, key, field, type)                                                  \
  KeyDef {                                                                               \
    sec, key, [](const RunConfig& c) { return real_str(c.field); }, \
        [](RunConfig& c, const std::string& v) { c.field = static_cast<type>(parse_real(v)); } \
  }
#define GLC_BOOL(sec, key, field)                                             \
  KeyDef {                                                                    \
    sec, key, [](const RunConfig& c) { return bool_str(c.field); },           \
        [](RunConfig& c, const std::string& v) { c.field = parse_bool(v); } \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      GLC_INT("run", "seed", seed, uint64_t),
      GLC_INT("run", "threads", threads, int),

      KeyDef{"data", "root", [](const RunConfig& c) { return c.data_root; },
             [](RunConfig& c, const std::string& v) { c.data_root = v; }},
      GLC_INT("data", "crop_size", crop_size, int),
      GLC_INT("data", "stride", stride, int),
      GLC_REAL("data", "label_fraction", label_fraction, double),
      GLC_REAL("data", "test_fraction", test_fraction, double),
      KeyDef{"data", "test_scenes", [](const RunConfig& c) { return list_str(c.test_scenes); },
             [](RunConfig& c, const std::string& v) { c.test_scenes = parse_words(v); }},
      GLC_INT("data", "test_limit", test_limit, size_t),

      GLC_INT("synth", "num_classes", synth.num_classes, int),
      GLC_INT("synth", "scene_size", synth.scene_size, int),
      GLC_INT("synth", "num_scenes", synth.num_scenes, int),
      GLC_INT("synth", "bands", synth.bands, int),
      GLC_INT("synth", "cell_size", synth.cell_size, int),
      KeyDef{"synth", "class_weights", [](const RunConfig& c) { return list_str(c.synth.class_weights); },
             [](RunConfig& c, const std::string& v) { c.synth.class_weights = parse_real_list(v); }},
      GLC_REAL("synth", "illumination_jitter", synth.illumination_jitter, float),
      GLC_REAL("synth", "color_spread", synth.color_spread, double),
      GLC_INT("synth", "seed", synth.seed, uint64_t),

      GLC_INT("network", "in_channels", network.in_channels, int),
      KeyDef{"network", "encoder_widths", [](const RunConfig& c) { return list_str(c.network.encoder_widths); },
             [](RunConfig& c, const std::string& v) { c.network.encoder_widths = parse_int_list<int>(v); }},
      KeyDef{"network", "encoder_strides", [](const RunConfig& c) { return list_str(c.network.encoder_strides); },
             [](RunConfig& c, const std::string& v) { c.network.encoder_strides = parse_int_list<int>(v); }},
      GLC_INT("network", "encoder_depth", network.encoder_depth, int),
      GLC_INT("network", "low_level_stage", network.low_level_stage, int),
      KeyDef{"network", "decoder_widths", [](const RunConfig& c) { return list_str(c.network.decoder_widths); },
             [](RunConfig& c, const std::string& v) { c.network.decoder_widths = parse_int_list<int>(v); }},
      GLC_INT("network", "num_classes", network.num_classes, int),
      GLC_INT("network", "projection_dim", network.projection_dim, int),

      GLC_REAL("augment", "crop_scale_min", crop.scale_min, double),
      GLC_REAL("augment", "crop_scale_max", crop.scale_max, double),
      GLC_REAL("augment", "crop_ratio_min", crop.ratio_min, double),
      GLC_REAL("augment", "crop_ratio_max", crop.ratio_max, double),
      GLC_BOOL("augment", "crop_resize", crop.resize),
      GLC_INT("augment", "crop_attempts", crop.max_attempts, int),
      GLC_REAL("augment", "flip_horizontal", flip.p_horizontal, double),
      GLC_REAL("augment", "flip_vertical", flip.p_vertical, double),
      GLC_REAL("augment", "rotate", rotate.probability, double),
      GLC_REAL("augment", "jitter", jitter.probability, double),
      GLC_REAL("augment", "brightness", jitter.brightness, double),
      GLC_REAL("augment", "contrast", jitter.contrast, double),
      GLC_REAL("augment", "saturation", jitter.saturation, double),
      GLC_REAL("augment", "hue", jitter.hue, double),
      GLC_REAL("augment", "blur", blur.probability, double),
      GLC_REAL("augment", "blur_sigma_min", blur.sigma_min, double),
      GLC_REAL("augment", "blur_sigma_max", blur.sigma_max, double),
      GLC_REAL("augment", "blur_kernel_fraction", blur.kernel_fraction, double),
      GLC_REAL("augment", "noise", noise.probability, double),
      GLC_REAL("augment", "noise_std_min", noise.stddev_min, double),
      GLC_REAL("augment", "noise_std_max", noise.stddev_max, double),
      GLC_REAL("augment", "grayscale", gray.probability, double),

      KeyDef{"pretrain", "method", [](const RunConfig& c) { return c.method; },
             [](RunConfig& c, const std::string& v) {
               if (v != "glcnet" && v != "simclr") throw InvalidArgument("method must be glcnet or simclr");
               c.method = v;
             }},
      GLC_REAL("pretrain", "lambda", glc.lambda, double),
      GLC_REAL("pretrain", "temperature", glc.contrastive.temperature, double),
      GLC_BOOL("pretrain", "include_positive_in_denominator", glc.contrastive.include_positive_in_denominator),
      KeyDef{"pretrain", "style_mode",
             [](const RunConfig& c) { return std::string(c.glc.style_mode == StyleMode::kStd ? "std" : "variance"); },
             [](RunConfig& c, const std::string& v) {
               if (v == "variance") {
                 c.glc.style_mode = StyleMode::kVariance;
               } else if (v == "std") {
                 c.glc.style_mode = StyleMode::kStd;
               } else {
                 throw InvalidArgument("style_mode must be variance or std");
               }
             }},
      GLC_INT("pretrain", "view_size", glc.view_size, int),
      GLC_INT("pretrain", "region_size", glc.local.region_size, int),
      GLC_INT("pretrain", "regions_per_sample", glc.local.regions_per_sample, int),
      GLC_REAL("pretrain", "match_tolerance", glc.local.match_tolerance, double),
      GLC_INT("pretrain", "max_border_shift", glc.local.max_border_shift, int),
      GLC_INT("pretrain", "max_region_attempts", glc.local.max_attempts, int),
      GLC_INT("pretrain", "batch_size", glc.batch_size, int),
      GLC_INT("pretrain", "epochs", glc.epochs, int),
      GLC_REAL("pretrain", "lr", glc.lr, double),
      GLC_INT("pretrain", "max_steps", glc.max_steps, int),
      GLC_BOOL("pretrain", "nostyle", glc.nostyle),
      GLC_BOOL("pretrain", "noglobe", glc.noglobe),
      GLC_BOOL("pretrain", "nolocal", glc.nolocal),

      GLC_INT("finetune", "epochs", schedule.epochs, int),
      GLC_INT("finetune", "batch_size", schedule.batch_size, int),
      GLC_REAL("finetune", "lr", schedule.initial_lr, double),
      GLC_REAL("finetune", "lr_decay", schedule.decay, double),
      KeyDef{"finetune", "load_groups", [](const RunConfig& c) { return list_str(c.load_groups); },
             [](RunConfig& c, const std::string& v) {
               c.load_groups = trim(v) == "none" ? std::vector<std::string>{} : parse_words(v);
             }},
      KeyDef{"finetune", "ignore_classes", [](const RunConfig& c) { return list_str(c.ignore_classes); },
             [](RunConfig& c, const std::string& v) { c.ignore_classes = parse_int_list<int>(v); }},
      GLC_INT("finetune", "eval_batch_size", eval_batch_size, int),
  };
  return table;
}

#undef GLC_INT
#undef GLC_REAL
#undef GLC_BOOL

const KeyDef* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : key_table()) {
    if (k.section == section && k.name == name) return &k;
  }
  return nullptr;
}

const KeyDef& find_dotted(const std::string& dotted) {
  const auto dot = dotted.find('.');
  const KeyDef* k = dot == std::string::npos ? nullptr : find_key(dotted.substr(0, dot), dotted.substr(dot + 1));
  if (!k) throw InvalidArgument("unknown config key '" + dotted + "'");
  return *k;
}

void collect(std::vector<std::string>& errors, const std::string& prefix, const std::function<void()>& check) {
  try {
    check();
  } catch (const Error& e) {
    errors.push_back(prefix + ": " + e.what());
  }
}

}  // namespace

RunConfig::RunConfig() {
  network.in_channels = 4;
  network.encoder_widths = {64, 256, 512, 1024, 2048};
  network.encoder_strides = {2, 2, 2, 2, 1};
  network.encoder_depth = 3;
  network.low_level_stage = 1;
  network.decoder_widths = {256, 256, 256};
  network.num_classes = 6;
  network.projection_dim = 128;
  synth.num_classes = 6;
  synth.bands = 4;
  synth.scene_size = 6000;
  synth.num_scenes = 38;
  synth.cell_size = 160;
}

GLCNetConfig RunConfig::resolved_glcnet() const {
  GLCNetConfig g = glc;
  if (method == "simclr") {
    g.nostyle = true;
    g.nolocal = true;
  }
  g.seed = seed;
  g.threads = threads;
  return g;
}

NetworkConfig RunConfig::resolved_network() const {
  NetworkConfig n = network;
  n.style_features = !resolved_glcnet().nostyle;
  return n;
}

AugmentationPipeline RunConfig::t1() const { return AugmentationPipeline::view_a(glc.view_size, crop); }

AugmentationPipeline RunConfig::t2() const {
  return AugmentationPipeline::view_b(glc.view_size, crop, flip, rotate, jitter, blur, noise, gray);
}

SplitSpec RunConfig::split_spec() const {
  SplitSpec s;
  s.test_fraction = test_fraction;
  s.test_scenes = test_scenes;
  s.test_limit = test_limit;
  return s;
}

std::filesystem::path RunConfig::resolved_data_root() const {
  if (!data_root.empty()) return data_root;
  if (const char* env = std::getenv("GLCNET_DATA_ROOT"); env && *env) return env;
  return ".";
}

std::vector<std::string> RunConfig::errors() const {
  std::vector<std::string> errs;
  if (threads < 1) errs.push_back("run.threads: must be >= 1");
  if (crop_size < 1) errs.push_back("data.crop_size: must be >= 1");
  if (stride < 1) errs.push_back("data.stride: must be >= 1");
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) errs.push_back("data.label_fraction: must lie in (0, 1]");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) errs.push_back("data.test_fraction: must lie in [0, 1)");
  collect(errs, "synth", [&] { synth.validate(); });
  collect(errs, "network", [&] { resolved_network().validate(); });
  collect(errs, "augment", [&] {
    t1().validate();
    t2().validate();
  });
  if (method == "simclr" && glc.noglobe) errs.push_back("pretrain.method: simclr is global-only and conflicts with noglobe");
  collect(errs, "pretrain", [&] { resolved_glcnet().validate(); });
  try {
    const int s = resolved_network().output_stride();
    if (glc.view_size % s != 0) {
      errs.push_back("pretrain.view_size: " + std::to_string(glc.view_size) +
                     " is not divisible by the encoder output stride " + std::to_string(s));
    }
    if (crop_size % s != 0) {
      errs.push_back("data.crop_size: " + std::to_string(crop_size) +
                     " is not divisible by the encoder output stride " + std::to_string(s));
    }
  } catch (const Error&) {
  }
  collect(errs, "finetune", [&] { schedule.validate(); });
  for (const auto& g : load_groups) {
    if (!is_group_name(g)) {
      errs.push_back("finetune.load_groups: unknown group '" + g + "'");
    } else if (g == "proj_global" || g == "proj_local") {
      errs.push_back("finetune.load_groups: projection head '" + g + "' is not part of fine-tuning");
    }
  }
  for (int c : ignore_classes) {
    if (c < 0 || c >= network.num_classes) {
      errs.push_back("finetune.ignore_classes: class " + std::to_string(c) + " outside [0, " +
                     std::to_string(network.num_classes) + ")");
    }
  }
  if (eval_batch_size < 1) errs.push_back("finetune.eval_batch_size: must be >= 1");
  return errs;
}

void RunConfig::validate() const {
  const auto errs = errors();
  if (!errs.empty()) throw InvalidArgument("invalid configuration:\n  " + join(errs, "\n  "));
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const KeyDef& k = find_dotted(dotted_key);
  try {
    k.set(*this, trim(value));
  } catch (const Error& e) {
    throw InvalidArgument(dotted_key + ": " + e.what());
  }
}

std::string RunConfig::get(const std::string& dotted_key) const { return find_dotted(dotted_key).get(*this); }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.section + "." + k.name);
  return out;
}

std::string RunConfig::canonical() const {
  std::string out, section;
  for (const auto& k : key_table()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    const std::string v = k.get(*this);
    out += k.name + " =" + (v.empty() ? "" : " " + v) + "\n";
  }
  return out;
}

uint64_t RunConfig::hash() const {
  RunConfig c = *this;
  if (c.method == "simclr") {
    c.glc.nostyle = true;
    c.glc.nolocal = true;
    c.method = "glcnet";
  }
  return fnv1a64(c.canonical());
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::vector<std::string> errs;
  std::set<std::string> seen_sections, seen_keys;
  std::string section;
  bool section_ok = false;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    const std::string line = trim(raw);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errs.push_back(where + "malformed section header '" + line + "'");
        section_ok = false;
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      section_ok = false;
      for (const auto& k : key_table()) section_ok = section_ok || k.section == section;
      if (!section_ok) errs.push_back(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back(where + "expected 'key = value', got '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      errs.push_back(where + "key '" + key + "' outside any section");
      continue;
    }
    if (!section_ok) continue;
    const KeyDef* k = find_key(section, key);
    if (!k) {
      errs.push_back(where + "unknown key '" + section + "." + key + "'");
      continue;
    }
    if (!seen_keys.insert(section + "." + key).second) {
      errs.push_back(where + "duplicate key '" + section + "." + key + "'");
      continue;
    }
    try {
      k->set(cfg, value);
    } catch (const Error& e) {
      errs.push_back(where + section + "." + key + ": " + e.what());
    }
  }
  if (!errs.empty()) throw InvalidArgument("config errors:\n  " + join(errs, "\n  "));
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  try {
    return parse(read_text_file(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void write_config_snapshot(const RunConfig& cfg, const std::filesystem::path& dir) {
  write_file_atomic(dir / "config.cfg", "# config_hash = " + hex64(cfg.hash()) + "\n" + cfg.canonical());
}

}  // namespace glcnet
