#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace advkit {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an explicit shape.
///
/// A default-constructed tensor is empty (rank 0, no data) and only serves as
/// a placeholder; every other tensor has positive dimensions and
/// `values().size() == shape_size(shape())`.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);  // zero-filled
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, double value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Same data under a new shape of equal size.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const noexcept;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Same shape and bit-identical values (distinguishes -0.0 from 0.0).
bool bit_equal(const Tensor& a, const Tensor& b) noexcept;

/// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double linf_distance(const Tensor& a, const Tensor& b);
double l2_distance(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& t);

/// acc += scale * x, elementwise.
void add_scaled(Tensor& acc, const Tensor& x, double scale);

}  // namespace advkit
