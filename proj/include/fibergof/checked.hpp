#pragma once

#include <cstdint>
#include <limits>

#include "fibergof/errors.hpp"

namespace fibergof {

// Overflow-checked integer helpers. The builtins accept any integral type,
// including __int128.

template <typename T>
constexpr T checked_add(T a, T b) {
  T out{};
  if (__builtin_add_overflow(a, b, &out)) throw Overflow("integer overflow in addition");
  return out;
}

template <typename T>
constexpr T checked_sub(T a, T b) {
  T out{};
  if (__builtin_sub_overflow(a, b, &out)) throw Overflow("integer overflow in subtraction");
  return out;
}

template <typename T>
constexpr T checked_mul(T a, T b) {
  T out{};
  if (__builtin_mul_overflow(a, b, &out)) throw Overflow("integer overflow in multiplication");
  return out;
}

__extension__ typedef __int128 wide_int;

inline std::int64_t narrow_checked(wide_int v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw Overflow("value does not fit in 64 bits");
  return static_cast<std::int64_t>(v);
}

}  // namespace fibergof
