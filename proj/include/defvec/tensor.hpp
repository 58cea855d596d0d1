#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "defvec/error.hpp"

namespace defvec {

/// Dense (batch, channel, height, width) array.
template <typename T>
class Tensor4 {
 public:
  using Shape = std::array<std::size_t, 4>;

  Tensor4() = default;
  Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
      : shape_{n, c, h, w}, data_(n * c * h * w, fill) {}
  explicit Tensor4(Shape shape, T fill = T(0)) : Tensor4(shape[0], shape[1], shape[2], shape[3], fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t batch() const { return shape_[0]; }
  std::size_t channels() const { return shape_[1]; }
  std::size_t height() const { return shape_[2]; }
  std::size_t width() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator()(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((b * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  T operator()(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((b * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  /// Pointer to the (b, c) plane.
  T* plane(std::size_t b, std::size_t c) { return data_.data() + (b * shape_[1] + c) * shape_[2] * shape_[3]; }
  const T* plane(std::size_t b, std::size_t c) const {
    return data_.data() + (b * shape_[1] + c) * shape_[2] * shape_[3];
  }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

inline std::string shape_string(const std::array<std::size_t, 4>& s) {
  return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]) + "x" + std::to_string(s[3]);
}

template <typename U, typename T>
Tensor4<U> convert_tensor(const Tensor4<T>& t) {
  Tensor4<U> out(t.batch(), t.channels(), t.height(), t.width());
  std::transform(t.values().begin(), t.values().end(), out.values().begin(), [](T v) { return static_cast<U>(v); });
  return out;
}

}  // namespace defvec
