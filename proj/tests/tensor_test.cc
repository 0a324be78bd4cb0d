#include "uenl/tensor.h"

#include <cmath>
#include <limits>

#include "gtest/gtest.h"
#include "uenl/errors.h"

namespace uenl {
namespace {

TEST(TensorTest, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), ShapeError);
  const Tensor t({2, 3}, std::vector<double>(6, 1.5));
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_DOUBLE_EQ(t.at(1, 2), 1.5);
}

TEST(TensorTest, RejectsNonFiniteElements) {
  EXPECT_THROW(Tensor::Vector({1.0, std::numeric_limits<double>::quiet_NaN()}),
               NumericError);
  EXPECT_THROW(Tensor::Vector({std::numeric_limits<double>::infinity()}),
               NumericError);
}

TEST(TensorTest, ScalarHasEmptyShapeAndOneElement) {
  const Tensor s = Tensor::Scalar(3.0);
  EXPECT_TRUE(s.shape().empty());
  EXPECT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.item(), 3.0);
  EXPECT_THROW(Tensor::Vector({1.0, 2.0}).item(), ShapeError);
}

TEST(TensorTest, RowSlicingAndGather) {
  const Tensor m = Tensor::Matrix({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(m.Rows(1, 3), Tensor::Matrix({{3, 4}, {5, 6}}));
  const std::vector<std::size_t> rows = {2, 0};
  EXPECT_EQ(m.SelectRows(rows), Tensor::Matrix({{5, 6}, {1, 2}}));
  EXPECT_THROW(m.Rows(2, 4), ShapeError);
  EXPECT_EQ(m.Reshaped({6}).shape(), Shape({6}));
  EXPECT_THROW(m.Reshaped({4}), ShapeError);
}

TEST(TensorTest, ZeroExtentShapes) {
  const Tensor empty({0, 4});
  EXPECT_EQ(empty.size(), 0u);
  EXPECT_EQ(RowCount(empty), 0u);
  EXPECT_EQ(RowWidth(empty), 4u);
}

}  // namespace
}  // namespace uenl
