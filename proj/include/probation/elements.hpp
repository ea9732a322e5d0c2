#pragma once
// The 33-slot probation legal element (PLE) vector.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace probation {

inline constexpr int kNumElements = 33;
inline constexpr int kNumBinaryElements = 31;
inline constexpr int kCategoricalArity = 5;

// Elements 32 and 33 are five-valued; everything else is presence/absence.
constexpr bool is_categorical(int element_id) { return element_id >= 32; }
constexpr int element_arity(int element_id) {
  return is_categorical(element_id) ? kCategoricalArity : 1;
}

class ElementVector {
 public:
  ElementVector() = default;

  // element_id is 1-based.
  int operator[](int element_id) const { return slots_.at(index(element_id)); }

  void set(int element_id, int value) {
    if (value < 0 || value > element_arity(element_id)) {
      throw std::out_of_range("value " + std::to_string(value) + " out of arity for element " +
                              std::to_string(element_id));
    }
    slots_[index(element_id)] = static_cast<std::uint8_t>(value);
  }

  bool any() const {
    for (auto s : slots_)
      if (s != 0) return true;
    return false;
  }

  int active_count() const {
    int n = 0;
    for (auto s : slots_) n += s != 0;
    return n;
  }

  friend bool operator==(const ElementVector&, const ElementVector&) = default;

 private:
  static std::size_t index(int element_id) {
    if (element_id < 1 || element_id > kNumElements) {
      throw std::out_of_range("unknown element " + std::to_string(element_id));
    }
    return static_cast<std::size_t>(element_id - 1);
  }

  std::array<std::uint8_t, kNumElements> slots_{};
};

}  // namespace probation
