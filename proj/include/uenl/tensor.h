#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace uenl {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Dense row-major array of doubles. Every element is finite; construction
// from non-finite data throws NumericError. A rank-0 tensor (empty shape)
// holds exactly one element.
class Tensor {
 public:
  // Scalar zero.
  Tensor();
  // Zero-filled tensor of the given shape.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value);
  static Tensor Full(Shape shape, double value);
  static Tensor Zeros(Shape shape) { return Full(std::move(shape), 0.0); }
  static Tensor Ones(Shape shape) { return Full(std::move(shape), 1.0); }
  // Rank-1 tensor.
  static Tensor Vector(std::vector<double> values);
  // Rank-2 tensor from nested rows; all rows must have equal length.
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t row, std::size_t col) const;
  // The single element of a tensor with size() == 1.
  double item() const;

  // Same data under a new shape with an equal element count.
  Tensor Reshaped(Shape shape) const;
  // Rows [begin, end) of a tensor with rank >= 1.
  Tensor Rows(std::size_t begin, std::size_t end) const;
  // Gathers the given rows (axis 0) in order.
  Tensor SelectRows(std::span<const std::size_t> rows) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::ostream& operator<<(std::ostream& out, const Tensor& t);

// Rank-2 helpers shared by several modules.
std::size_t RowCount(const Tensor& t);
std::size_t RowWidth(const Tensor& t);

}  // namespace uenl
