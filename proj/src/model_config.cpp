#include "dbenet/model_config.hpp"

#include "dbenet/common.hpp"

namespace dbenet {

using nlohmann::json;

ModelConfig ModelConfig::desk_dbenet(uint64_t seed) {
  ModelConfig c;
  c.model = "dbenet";
  c.seed = seed;
  c.attention.d = c.kpfcn.d_kp();
  return c;
}

ModelConfig ModelConfig::desk_teacher(uint64_t seed) {
  ModelConfig c = desk_dbenet(seed);
  c.model = "teacher";
  return c;
}

ModelConfig ModelConfig::paper_dbenet(uint64_t seed) {
  ModelConfig c;
  c.model = "dbenet";
  c.seed = seed;
  c.sfcn.widths = {32, 64, 128, 256};
  c.sfcn.d_out = 32;
  c.kpfcn.widths = {64, 128, 128};
  c.attention.d = c.kpfcn.d_kp();
  return c;
}

json ModelConfig::to_json() const {
  json j;
  j["model"] = model;
  j["seed"] = seed;
  j["sfcn"] = {{"widths", sfcn.widths}, {"d_out", sfcn.d_out}, {"voxel_size", sfcn.voxel_size}};
  j["kpfcn"] = {{"widths", kpfcn.widths},
                {"base_dl", kpfcn.base_dl},
                {"radius_factor", kpfcn.radius_factor},
                {"sigma_factor", kpfcn.sigma_factor},
                {"shell_factor", kpfcn.shell_factor},
                {"kernel_points", kpfcn.kernel_points},
                {"neighbor_cap", kpfcn.neighbor_cap}};
  j["attention"] = {{"d", attention.d}};
  j["aux"] = {{"channels", aux.channels}, {"hidden", aux.hidden}};
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  try {
    ModelConfig c;
    c.model = j.at("model").get<std::string>();
    c.seed = j.at("seed").get<uint64_t>();
    const auto& s = j.at("sfcn");
    c.sfcn.widths = s.at("widths").get<std::vector<int>>();
    c.sfcn.d_out = s.at("d_out").get<int>();
    c.sfcn.voxel_size = s.at("voxel_size").get<double>();
    const auto& k = j.at("kpfcn");
    c.kpfcn.widths = k.at("widths").get<std::vector<int>>();
    c.kpfcn.base_dl = k.at("base_dl").get<double>();
    c.kpfcn.radius_factor = k.at("radius_factor").get<double>();
    c.kpfcn.sigma_factor = k.at("sigma_factor").get<double>();
    c.kpfcn.shell_factor = k.at("shell_factor").get<double>();
    c.kpfcn.kernel_points = k.at("kernel_points").get<int>();
    c.kpfcn.neighbor_cap = k.at("neighbor_cap").get<int>();
    c.attention.d = j.at("attention").at("d").get<int>();
    c.aux.channels = j.at("aux").at("channels").get<int>();
    c.aux.hidden = j.at("aux").at("hidden").get<int>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid model config: ") + e.what());
  }
}

}  // namespace dbenet
