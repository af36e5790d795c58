#include "mmhar/core/types.hpp"

#include "mmhar/core/errors.hpp"

namespace mmhar {

bool ImuSample::valid() const {
  if (module_id >= kImuModules) return false;
  for (float v : channels()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void SensorGeometry::validate() const {
  if (!(cylinder_height_cm > 0.0) || !(cylinder_radius_cm > 0.0))
    throw ConfigError("sensor geometry: cylinder dimensions must be positive");
  if (marker_rows <= 0 || marker_cols <= 0)
    throw ConfigError("sensor geometry: marker grid must be non-empty");
  if (!(outer_ring_radius_px > 0.0))
    throw ConfigError("sensor geometry: outer ring radius must be positive");
}

}  // namespace mmhar
