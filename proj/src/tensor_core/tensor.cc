#include "uenl/tensor.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "uenl/errors.h"

namespace uenl {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(NumElements(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != NumElements(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeToString(shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError("non-finite tensor element at flat index " +
                         std::to_string(i) + " (shape " +
                         ShapeToString(shape_) + ")");
    }
  }
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::Full(Shape shape, double value) {
  const std::size_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::Vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n_rows * n_cols);
  for (const auto& row : rows) {
    if (row.size() != n_cols) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({n_rows, n_cols}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     ShapeToString(shape_));
  }
  return shape_[axis];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw ShapeError("at(row, col) requires a rank-2 tensor");
  return data_[row * shape_[1] + col];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape_));
  }
  return data_[0];
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (NumElements(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + ShapeToString(shape_) + " to " +
                     ShapeToString(shape));
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

Tensor Tensor::Rows(std::size_t begin, std::size_t end) const {
  if (rank() == 0 || begin > end || end > shape_[0]) {
    throw ShapeError("row range out of bounds for " + ShapeToString(shape_));
  }
  const std::size_t stride = shape_[0] == 0 ? 0 : data_.size() / shape_[0];
  Shape shape = shape_;
  shape[0] = end - begin;
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_.assign(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                   data_.begin() + static_cast<std::ptrdiff_t>(end * stride));
  return out;
}

Tensor Tensor::SelectRows(std::span<const std::size_t> rows) const {
  if (rank() == 0) throw ShapeError("SelectRows on a scalar");
  const std::size_t stride = shape_[0] == 0 ? 0 : data_.size() / shape_[0];
  Shape shape = shape_;
  shape[0] = rows.size();
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_.clear();
  out.data_.reserve(rows.size() * stride);
  for (std::size_t r : rows) {
    if (r >= shape_[0]) throw ShapeError("row index out of range");
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(r * stride);
    out.data_.insert(out.data_.end(), first,
                     first + static_cast<std::ptrdiff_t>(stride));
  }
  return out;
}

std::ostream& operator<<(std::ostream& out, const Tensor& t) {
  out << "Tensor" << ShapeToString(t.shape()) << '{';
  const std::size_t shown = std::min<std::size_t>(t.size(), 16);
  for (std::size_t i = 0; i < shown; ++i) out << (i ? ", " : "") << t[i];
  if (shown < t.size()) out << ", ...";
  return out << '}';
}

std::size_t RowCount(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("expected rank-2 tensor");
  return t.shape()[0];
}

std::size_t RowWidth(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("expected rank-2 tensor");
  return t.shape()[1];
}

}  // namespace uenl
