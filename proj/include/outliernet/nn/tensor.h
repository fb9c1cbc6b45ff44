// Copyright 2026 The OutlierNet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OUTLIERNET_NN_TENSOR_H_
#define OUTLIERNET_NN_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace outliernet::nn {

// (batch, channels, height, width); width varies fastest.
struct Shape {
  size_t n = 0, c = 0, h = 0, w = 0;

  size_t size() const { return n * c * h * w; }
  size_t sample_size() const { return c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string ToString() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
           std::to_string(h) + ", " + std::to_string(w) + ")";
  }
};

template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor4(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& at(size_t n, size_t c, size_t h, size_t w) {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  T at(size_t n, size_t c, size_t h, size_t w) const {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  // Start of one (n, c) plane.
  T* plane(size_t n, size_t c) {
    return data_.data() + (n * shape_.c + c) * shape_.h * shape_.w;
  }
  const T* plane(size_t n, size_t c) const {
    return data_.data() + (n * shape_.c + c) * shape_.h * shape_.w;
  }

  // Same buffer viewed under a shape of equal element count.
  Tensor4 Reshaped(Shape shape) const&;
  Tensor4 Reshaped(Shape shape) &&;

 private:
  Shape shape_;
  std::vector<T> data_;
};

}  // namespace outliernet::nn

#endif  // OUTLIERNET_NN_TENSOR_H_
