#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mmhar::model {

enum class InitKind {
  FanInUniform,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  Zeros,
  Ones,
  Positional,  // N(0, 1) * 0.02
};

struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  int fan_in = 1;
  InitKind init = InitKind::Zeros;
};

class ParamLayout {
 public:
  std::size_t add(std::string name, std::size_t size, InitKind init, int fan_in = 1);
  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::size_t total() const { return total_; }
  const ParamGroup& group(const std::string& name) const;

 private:
  std::vector<ParamGroup> groups_;
  std::size_t total_ = 0;
};

// All weights as one flat vector, addressed through the layout.
class Params {
 public:
  Params() = default;
  Params(std::shared_ptr<const ParamLayout> layout, std::vector<double> values);

  static Params initialize(std::shared_ptr<const ParamLayout> layout, std::uint64_t seed);

  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }
  std::span<const double> group(const std::string& name) const;
  std::span<double> group(const std::string& name);
  const ParamLayout& layout() const { return *layout_; }
  std::shared_ptr<const ParamLayout> layout_ptr() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  const double* data() const { return values_.data(); }
  bool all_finite() const;

 private:
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<double> values_;
};

}  // namespace mmhar::model
