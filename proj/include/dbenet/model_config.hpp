#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dbenet {

// Architecture knobs shared by the student and teacher networks. The desk
// preset keeps full training pipelines fast on a CPU; the paper-scale preset
// matches the published feature widths.
struct SfcnConfig {
  std::vector<int> widths = {16, 32, 64};  // per level; last = encoder width
  int d_out = 16;                          // descriptor width
  double voxel_size = 0.05;                // meters

  int levels() const { return static_cast<int>(widths.size()); }
  int d_enc() const { return widths.empty() ? 0 : widths.back(); }
};

struct KpfcnConfig {
  std::vector<int> widths = {16, 32, 32};  // per level; last = D_kp
  double base_dl = 0.05;                   // level-0 subsampling grid (meters)
  double radius_factor = 2.5;              // neighborhood radius = factor * dl * 2^level
  double sigma_factor = 1.0;               // kernel influence = factor * dl * 2^level
  double shell_factor = 1.5;               // kernel shell radius = factor * dl
  int kernel_points = 15;                  // 1 center + shell
  int neighbor_cap = 40;

  int levels() const { return static_cast<int>(widths.size()); }
  int d_kp() const { return widths.empty() ? 0 : widths.back(); }
};

struct AttentionConfig {
  int d = 32;  // attention width; defaults to the key/value source width
};

struct AuxEncoderConfig {
  int channels = 3;  // auxiliary modality channels
  int hidden = 32;
};

struct ModelConfig {
  std::string model = "dbenet";  // "dbenet" or "teacher"
  SfcnConfig sfcn;
  KpfcnConfig kpfcn;
  AttentionConfig attention;
  AuxEncoderConfig aux;
  uint64_t seed = 0;  // initialization seed

  static ModelConfig desk_dbenet(uint64_t seed);
  static ModelConfig desk_teacher(uint64_t seed);
  static ModelConfig paper_dbenet(uint64_t seed);

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

}  // namespace dbenet
