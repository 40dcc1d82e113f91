#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "bfarl/error.hpp"

namespace bfarl {

// Binary label in the {-1, +1} sample space.
enum class Label : int { negative = -1, positive = 1 };

inline constexpr int kNumGroups = 2;

// Sensitive attribute value. Group 0 is the protected group by convention.
using Group = int;

constexpr int to_int(Label y) { return static_cast<int>(y); }
constexpr bool is_positive(Label y) { return y == Label::positive; }
constexpr Label flipped(Label y) {
  return y == Label::positive ? Label::negative : Label::positive;
}

inline Label label_from_int(int v) {
  if (v == 1) return Label::positive;
  if (v == -1) return Label::negative;
  throw DomainError("label must be -1 or +1, got " + std::to_string(v));
}

inline void check_group(Group a) {
  if (a != 0 && a != 1)
    throw DomainError("group must be 0 or 1, got " + std::to_string(a));
}

template <typename T>
using PerGroup = std::array<T, kNumGroups>;

}  // namespace bfarl
