#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "glcnet/network.hpp"

namespace glcnet {

enum class DType : uint8_t { kFloat32 = 1, kFloat64 = 2 };

struct TensorBlob {
  std::string name;
  DType dtype = DType::kFloat32;
  std::vector<int> shape;
  std::string bytes;  // little-endian raw values

  template <typename T>
  Tensor<T> to_tensor() const;
};

struct GroupBlob {
  std::string name;
  std::vector<TensorBlob> tensors;
};

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointBundle {
  std::map<std::string, std::string> metadata;  // epoch, loss, config_hash, seed, ...
  std::vector<GroupBlob> groups;

  const GroupBlob* group(const std::string& name) const;
  std::string serialize() const;
  static CheckpointBundle parse(std::string_view bytes);
};

template <typename T>
CheckpointBundle capture_checkpoint(EncoderDecoderModel<T>& model, std::map<std::string, std::string> metadata);

void save_checkpoint(const std::filesystem::path& path, const CheckpointBundle& bundle);
CheckpointBundle read_checkpoint(const std::filesystem::path& path);

struct LoadReport {
  std::vector<std::string> loaded_groups;
  // Tensors left at their fresh initialization because the input band count
  // of the checkpoint differs from the model.
  std::vector<std::string> kept_fresh;
};

// Copies the named groups from the bundle into the model. Parameters outside
// these groups are untouched, so callers initialize the model first.
template <typename T>
LoadReport load_groups(EncoderDecoderModel<T>& model, const CheckpointBundle& bundle,
                       const std::vector<std::string>& group_names);

uint32_t crc32_of(std::string_view bytes);

}  // namespace glcnet
