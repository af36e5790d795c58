#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace mmhar {

// The 15-way label taxonomy. Idle is the NULL class for event scoring.
enum class ActionClass : std::uint8_t {
  Pinching,
  Pulling,
  Pushing,
  Rubbing,
  Patting,
  Tapping,
  Scratching,
  Lingering,
  Massaging,
  Squeezing,
  Trembling,
  Shaking,
  Stroking,
  Poking,
  Idle,
};

inline constexpr int kNumClasses = 15;

inline constexpr std::array<ActionClass, kNumClasses> kAllActions = {
    ActionClass::Pinching,  ActionClass::Pulling,   ActionClass::Pushing,
    ActionClass::Rubbing,   ActionClass::Patting,   ActionClass::Tapping,
    ActionClass::Scratching, ActionClass::Lingering, ActionClass::Massaging,
    ActionClass::Squeezing, ActionClass::Trembling, ActionClass::Shaking,
    ActionClass::Stroking,  ActionClass::Poking,    ActionClass::Idle,
};

constexpr int class_index(ActionClass c) { return static_cast<int>(c); }
ActionClass class_from_index(int index);

// Lowercase names as used in every file format and report.
std::string_view to_string(ActionClass c);
std::optional<ActionClass> parse_action(std::string_view name);

enum class Level : std::uint8_t { Low, Medium, High };

// Contact area uses S/M/L, the other two axes L/M/H; all three are stored as
// ordered levels (Small == Low, Large == High).
struct ContactAttributes {
  Level contact_area;
  Level pressure_intensity;
  Level frequency;

  friend bool operator==(const ContactAttributes&, const ContactAttributes&) = default;
};

std::optional<ContactAttributes> action_attributes(ActionClass c);

char area_letter(Level l);   // S/M/L
char level_letter(Level l);  // L/M/H

}  // namespace mmhar
