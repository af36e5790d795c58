#include "mmhar/model/params.hpp"

#include <cmath>
#include <random>

#include "mmhar/core/errors.hpp"

namespace mmhar::model {

std::size_t ParamLayout::add(std::string name, std::size_t size, InitKind init, int fan_in) {
  std::size_t off = total_;
  groups_.push_back({std::move(name), off, size, fan_in, init});
  total_ += size;
  return off;
}

const ParamGroup& ParamLayout::group(const std::string& name) const {
  for (const auto& g : groups_)
    if (g.name == name) return g;
  throw ConfigError("no parameter group '" + name + "'");
}

Params::Params(std::shared_ptr<const ParamLayout> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_->total())
    throw DataError("params: flat vector has " + std::to_string(values_.size()) + " values, layout needs " +
                    std::to_string(layout_->total()));
}

Params Params::initialize(std::shared_ptr<const ParamLayout> layout, std::uint64_t seed) {
  std::vector<double> v(layout->total(), 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& g : layout->groups()) {
    double* p = v.data() + g.offset;
    switch (g.init) {
      case InitKind::FanInUniform: {
        double lim = 1.0 / std::sqrt(static_cast<double>(g.fan_in));
        std::uniform_real_distribution<double> u(-lim, lim);
        for (std::size_t i = 0; i < g.size; ++i) p[i] = u(rng);
        break;
      }
      case InitKind::Zeros: break;
      case InitKind::Ones:
        for (std::size_t i = 0; i < g.size; ++i) p[i] = 1.0;
        break;
      case InitKind::Positional:
        for (std::size_t i = 0; i < g.size; ++i) p[i] = 0.02 * normal(rng);
        break;
    }
  }
  return Params(std::move(layout), std::move(v));
}

std::span<const double> Params::group(const std::string& name) const {
  const auto& g = layout_->group(name);
  return std::span<const double>(values_).subspan(g.offset, g.size);
}

std::span<double> Params::group(const std::string& name) {
  const auto& g = layout_->group(name);
  return std::span<double>(values_).subspan(g.offset, g.size);
}

bool Params::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace mmhar::model
