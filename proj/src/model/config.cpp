#include "mmhar/model/config.hpp"

#include <string>

#include "mmhar/core/errors.hpp"
#include "mmhar/core/types.hpp"

namespace mmhar::model {

int FusionConfig::imu_token_width() const { return imu_group * kImuBlockWidth; }

void FusionConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model config: " + m); };
  if (window <= 0 || side <= 0 || tubelet_t <= 0 || patch <= 0 || embed_dim <= 0 || heads <= 0 || depth < 0 ||
      ff_mult <= 0 || imu_group <= 0 || feature_dim <= 0 || num_classes <= 1)
    fail("all dimensions must be positive");
  if (side % patch != 0) fail("side " + std::to_string(side) + " not divisible by patch " + std::to_string(patch));
  if (window % tubelet_t != 0)
    fail("window " + std::to_string(window) + " not divisible by tubelet_t " + std::to_string(tubelet_t));
  if (window % imu_group != 0)
    fail("window " + std::to_string(window) + " not divisible by imu_group " + std::to_string(imu_group));
  if (embed_dim % heads != 0)
    fail("embed_dim " + std::to_string(embed_dim) + " not divisible by heads " + std::to_string(heads));
}

nlohmann::json to_json(const FusionConfig& c) {
  return {{"window", c.window},       {"side", c.side},           {"tubelet_t", c.tubelet_t},
          {"patch", c.patch},         {"embed_dim", c.embed_dim}, {"heads", c.heads},
          {"depth", c.depth},         {"ff_mult", c.ff_mult},     {"imu_group", c.imu_group},
          {"feature_dim", c.feature_dim}, {"num_classes", c.num_classes}, {"seed", c.seed}};
}

FusionConfig fusion_config_from_json(const nlohmann::json& j) {
  FusionConfig c;
  try {
    c.window = j.at("window").get<int>();
    c.side = j.at("side").get<int>();
    c.tubelet_t = j.at("tubelet_t").get<int>();
    c.patch = j.at("patch").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.heads = j.at("heads").get<int>();
    c.depth = j.at("depth").get<int>();
    c.ff_mult = j.at("ff_mult").get<int>();
    c.imu_group = j.at("imu_group").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace mmhar::model
