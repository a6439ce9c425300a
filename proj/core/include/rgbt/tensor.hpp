#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rgbt {

class Rng;

/// Dense row-major tensor of doubles. This is the substrate for all fusion
/// math: small, copy-friendly, no views or strides. Operations treat tensors
/// as immutable values and return fresh results.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor. Extents must be positive.
  explicit Tensor(std::vector<int> shape);

  /// Takes ownership of `values`; product(shape) must equal values.size().
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(int rows, int cols, std::vector<double> values);
  static Tensor identity(int n);
  static Tensor uniform(std::vector<int> shape, Rng& rng, double lo, double hi);

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool defined() const { return !shape_.empty(); }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }

  double operator()(int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator()(int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator()(int i, int j) const { return data_[idx2(i, j)]; }
  double& operator()(int i, int j) { return data_[idx2(i, j)]; }
  double operator()(int c, int h, int w) const { return data_[idx3(c, h, w)]; }
  double& operator()(int c, int h, int w) { return data_[idx3(c, h, w)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;
  bool all_finite() const;

  /// Text form: one line with the extents, then whitespace-separated values.
  /// The default precision round-trips doubles exactly.
  void write_text(std::ostream& os, int precision = 17) const;
  static Tensor read_text(std::istream& is);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t idx2(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(shape_[1]) +
           static_cast<std::size_t>(j);
  }
  std::size_t idx3(int c, int h, int w) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_[1]) +
            static_cast<std::size_t>(h)) *
               static_cast<std::size_t>(shape_[2]) +
           static_cast<std::size_t>(w);
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace rgbt
