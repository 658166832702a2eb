#include "glcnet/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

#include "glcnet/error.hpp"
#include "glcnet/util.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace glcnet {

namespace {

constexpr char kMagic[8] = {'G', 'L', 'C', 'N', 'C', 'K', 'P', 'T'};

size_t dtype_size(DType d) { return d == DType::kFloat64 ? 8 : 4; }

template <typename T>
DType dtype_of();
template <>
DType dtype_of<float>() {
  return DType::kFloat32;
}
template <>
DType dtype_of<double>() {
  return DType::kFloat64;
}

class Writer {
 public:
  template <typename U>
  void put(U v) {
    char buf[sizeof(U)];
    std::memcpy(buf, &v, sizeof(U));
    out_.append(buf, sizeof(U));
  }
  void put_string16(const std::string& s) {
    if (s.size() > 0xffff) throw InvalidArgument("checkpoint name too long: " + s.substr(0, 32));
    put<uint16_t>(static_cast<uint16_t>(s.size()));
    out_ += s;
  }
  void put_bytes(std::string_view b) { out_.append(b); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, in_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string get_bytes(size_t n) {
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string get_string16() { return get_bytes(get<uint16_t>()); }
  size_t pos() const { return pos_; }

 private:
  void need(size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("checkpoint is truncated at byte " + std::to_string(pos_));
  }
  std::string_view in_;
  size_t pos_ = 0;
};

std::string serialize_metadata(const std::map<std::string, std::string>& meta) {
  std::string out;
  for (const auto& [k, v] : meta) {
    if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw InvalidArgument("checkpoint metadata entry '" + k + "' contains a reserved character");
    }
    out += k + "=" + v + "\n";
  }
  return out;
}

std::map<std::string, std::string> parse_metadata(const std::string& text) {
  std::map<std::string, std::string> meta;
  for (const auto& line : split(text, '\n')) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed checkpoint metadata line: " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

template <typename T>
TensorBlob blob_from(const Parameter<T>& p) {
  TensorBlob b;
  b.name = p.name;
  b.dtype = dtype_of<T>();
  b.shape = p.value.shape();
  b.bytes.assign(reinterpret_cast<const char*>(p.value.data()), p.value.size() * sizeof(T));
  return b;
}

}  // namespace

uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  size_t off = 0;
  while (off < bytes.size()) {
    const size_t chunk = std::min<size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(chunk));
    off += chunk;
  }
  return static_cast<uint32_t>(crc);
}

template <typename T>
Tensor<T> TensorBlob::to_tensor() const {
  Tensor<T> t(shape);
  const size_t n = t.size();
  if (bytes.size() != n * dtype_size(dtype)) throw FormatError("tensor '" + name + "' byte size does not match shape");
  if (dtype == dtype_of<T>()) {
    std::memcpy(t.data(), bytes.data(), bytes.size());
  } else if (dtype == DType::kFloat32) {
    for (size_t i = 0; i < n; ++i) {
      float v;
      std::memcpy(&v, bytes.data() + 4 * i, 4);
      t[i] = static_cast<T>(v);
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      double v;
      std::memcpy(&v, bytes.data() + 8 * i, 8);
      t[i] = static_cast<T>(v);
    }
  }
  return t;
}

const GroupBlob* CheckpointBundle::group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

std::string CheckpointBundle::serialize() const {
  Writer w;
  w.put_bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.put<uint32_t>(kCheckpointVersion);
  const std::string meta = serialize_metadata(metadata);
  w.put<uint32_t>(static_cast<uint32_t>(meta.size()));
  w.put_bytes(meta);
  w.put<uint32_t>(static_cast<uint32_t>(groups.size()));
  for (const auto& g : groups) {
    w.put_string16(g.name);
    w.put<uint32_t>(static_cast<uint32_t>(g.tensors.size()));
    for (const auto& t : g.tensors) {
      w.put_string16(t.name);
      w.put<uint8_t>(static_cast<uint8_t>(t.dtype));
      w.put<uint8_t>(static_cast<uint8_t>(t.shape.size()));
      for (int d : t.shape) w.put<uint32_t>(static_cast<uint32_t>(d));
      w.put<uint64_t>(t.bytes.size());
      w.put_bytes(t.bytes);
      w.put<uint32_t>(crc32_of(t.bytes));
    }
  }
  const uint32_t file_crc = crc32_of(w.str());
  w.put<uint32_t>(file_crc);
  return std::move(w.str());
}

CheckpointBundle CheckpointBundle::parse(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  if (crc32_of(bytes.substr(0, bytes.size() - 4)) != stored_crc) {
    throw FormatError("checkpoint checksum mismatch (file is corrupt)");
  }
  Reader r(bytes.substr(0, bytes.size() - 4));
  r.get_bytes(sizeof(kMagic));
  const auto version = r.get<uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  CheckpointBundle b;
  b.metadata = parse_metadata(r.get_bytes(r.get<uint32_t>()));
  const auto ngroups = r.get<uint32_t>();
  for (uint32_t gi = 0; gi < ngroups; ++gi) {
    GroupBlob g;
    g.name = r.get_string16();
    const auto ntensors = r.get<uint32_t>();
    for (uint32_t ti = 0; ti < ntensors; ++ti) {
      TensorBlob t;
      t.name = r.get_string16();
      const auto dt = r.get<uint8_t>();
      if (dt != 1 && dt != 2) throw FormatError("tensor '" + t.name + "' has unknown dtype " + std::to_string(dt));
      t.dtype = static_cast<DType>(dt);
      const auto nd = r.get<uint8_t>();
      size_t count = 1;
      for (int d = 0; d < nd; ++d) {
        t.shape.push_back(static_cast<int>(r.get<uint32_t>()));
        count *= static_cast<size_t>(t.shape.back());
      }
      const auto nbytes = r.get<uint64_t>();
      if (nbytes != count * dtype_size(t.dtype)) throw FormatError("tensor '" + t.name + "' size does not match shape");
      t.bytes = r.get_bytes(nbytes);
      if (crc32_of(t.bytes) != r.get<uint32_t>()) throw FormatError("tensor '" + t.name + "' checksum mismatch");
      g.tensors.push_back(std::move(t));
    }
    b.groups.push_back(std::move(g));
  }
  if (r.pos() != bytes.size() - 4) throw FormatError("trailing bytes after checkpoint payload");
  return b;
}

template <typename T>
CheckpointBundle capture_checkpoint(EncoderDecoderModel<T>& model, std::map<std::string, std::string> metadata) {
  CheckpointBundle b;
  b.metadata = std::move(metadata);
  const auto& cfg = model.config();
  b.metadata["in_channels"] = std::to_string(cfg.in_channels);
  b.metadata["num_classes"] = std::to_string(cfg.num_classes);
  for (auto& g : model.groups()) {
    GroupBlob gb;
    gb.name = g.name;
    for (const auto* p : g.params) gb.tensors.push_back(blob_from(*p));
    b.groups.push_back(std::move(gb));
  }
  return b;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointBundle& bundle) {
  write_file_atomic(path, bundle.serialize());
}

CheckpointBundle read_checkpoint(const std::filesystem::path& path) {
  return CheckpointBundle::parse(read_text_file(path));
}

template <typename T>
LoadReport load_groups(EncoderDecoderModel<T>& model, const CheckpointBundle& bundle,
                       const std::vector<std::string>& group_names) {
  for (const auto& name : group_names) {
    if (!is_group_name(name)) throw InvalidArgument("unknown parameter group '" + name + "'");
    if (!bundle.group(name)) throw FormatError("checkpoint has no parameter group '" + name + "'");
  }
  LoadReport report;
  for (auto& g : model.groups()) {
    if (std::find(group_names.begin(), group_names.end(), g.name) == group_names.end()) continue;
    const GroupBlob& gb = *bundle.group(g.name);
    if (gb.tensors.size() != g.params.size()) {
      throw FormatError("group '" + g.name + "' has " + std::to_string(gb.tensors.size()) +
                        " tensors in the checkpoint, model expects " + std::to_string(g.params.size()));
    }
    for (size_t i = 0; i < g.params.size(); ++i) {
      Parameter<T>& p = *g.params[i];
      const TensorBlob& t = gb.tensors[i];
      if (t.name != p.name) throw FormatError("tensor name mismatch: '" + t.name + "' vs '" + p.name + "'");
      if (t.shape != p.value.shape()) {
        // Only the first encoder convolution may differ, in its input-band axis.
        const bool band_mismatch = g.name == "encoder" && i == 0 && t.shape.size() == 4 &&
                                   t.shape[0] == p.value.dim(0) && t.shape[2] == p.value.dim(2) &&
                                   t.shape[3] == p.value.dim(3);
        if (!band_mismatch) throw FormatError("tensor '" + t.name + "' shape mismatch with model");
        report.kept_fresh.push_back(p.name);
        continue;
      }
      p.value = t.to_tensor<T>();
    }
    report.loaded_groups.push_back(g.name);
  }
  return report;
}

template Tensor<float> TensorBlob::to_tensor<float>() const;
template Tensor<double> TensorBlob::to_tensor<double>() const;
template CheckpointBundle capture_checkpoint(EncoderDecoderModel<float>&, std::map<std::string, std::string>);
template CheckpointBundle capture_checkpoint(EncoderDecoderModel<double>&, std::map<std::string, std::string>);
template LoadReport load_groups(EncoderDecoderModel<float>&, const CheckpointBundle&, const std::vector<std::string>&);
template LoadReport load_groups(EncoderDecoderModel<double>&, const CheckpointBundle&,
                                const std::vector<std::string>&);

}  // namespace glcnet
