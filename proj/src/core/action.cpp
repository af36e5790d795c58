#include "mmhar/core/action.hpp"

#include <stdexcept>

namespace mmhar {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames = {
    "pinching", "pulling",   "pushing",  "rubbing",   "patting",
    "tapping",  "scratching", "lingering", "massaging", "squeezing",
    "trembling", "shaking",  "stroking", "poking",    "idle",
};

constexpr Level S = Level::Low, M = Level::Medium, L = Level::High;
constexpr Level Lo = Level::Low, Me = Level::Medium, Hi = Level::High;

// Contact area, pressure intensity, frequency per class (Idle excluded).
constexpr std::array<ContactAttributes, kNumClasses - 1> kAttributes = {{
    {S, Hi, Me},  // pinching
    {L, Hi, Lo},  // pulling
    {L, Hi, Lo},  // pushing
    {M, Me, Hi},  // rubbing
    {L, Me, Hi},  // patting
    {M, Me, Hi},  // tapping
    {S, Lo, Hi},  // scratching
    {M, Lo, Lo},  // lingering
    {L, Me, Me},  // massaging
    {L, Hi, Lo},  // squeezing
    {S, Lo, Me},  // trembling
    {L, Me, Hi},  // shaking
    {M, Lo, Me},  // stroking
    {S, Me, Me},  // poking
}};

}  // namespace

ActionClass class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) throw std::out_of_range("class index out of range");
  return static_cast<ActionClass>(index);
}

std::string_view to_string(ActionClass c) { return kNames[static_cast<std::size_t>(c)]; }

std::optional<ActionClass> parse_action(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kNames[static_cast<std::size_t>(i)] == name) return static_cast<ActionClass>(i);
  }
  return std::nullopt;
}

std::optional<ContactAttributes> action_attributes(ActionClass c) {
  if (c == ActionClass::Idle) return std::nullopt;
  return kAttributes[static_cast<std::size_t>(c)];
}

char area_letter(Level l) {
  switch (l) {
    case Level::Low: return 'S';
    case Level::Medium: return 'M';
    case Level::High: return 'L';
  }
  return '?';
}

char level_letter(Level l) {
  switch (l) {
    case Level::Low: return 'L';
    case Level::Medium: return 'M';
    case Level::High: return 'H';
  }
  return '?';
}

}  // namespace mmhar
