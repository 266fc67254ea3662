#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qelm {

using cplx = std::complex<double>;
using MatrixXcdR = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense complex tensor stored row-major: the last axis varies fastest.
///
/// The element at multi-index (i_0, ..., i_{r-1}) lives at
/// sum_k i_k * stride_k with stride_{r-1} = 1 and
/// stride_k = stride_{k+1} * extent_{k+1}. A rank-0 tensor holds one scalar.
class DenseTensor {
 public:
  using Shape = std::vector<std::size_t>;

  DenseTensor() : data_(1, cplx{0.0, 0.0}) {}
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<cplx> data);

  static DenseTensor from_matrix(const MatrixXcdR& m);
  static DenseTensor vector(std::initializer_list<cplx> values);

  std::size_t rank() const { return shape_.size(); }
  const Shape& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  std::vector<cplx>& storage() { return data_; }
  const std::vector<cplx>& storage() const { return data_; }

  cplx& operator()(std::initializer_list<std::size_t> index);
  const cplx& operator()(std::initializer_list<std::size_t> index) const;

  /// Same data, new shape; the element count must match.
  DenseTensor reshaped(Shape shape) const&;
  DenseTensor reshaped(Shape shape) &&;
  /// Result axis k is input axis `axes[k]`.
  DenseTensor permuted(const std::vector<std::size_t>& axes) const;

  /// Row-major matrix view, rows = product of the first `row_axes` extents.
  Eigen::Map<MatrixXcdR> as_matrix(std::size_t row_axes);
  Eigen::Map<const MatrixXcdR> as_matrix(std::size_t row_axes) const;
  Eigen::Map<Eigen::VectorXcd> as_vector();
  Eigen::Map<const Eigen::VectorXcd> as_vector() const;

  double norm() const;
  cplx dot(const DenseTensor& other) const;  // <this|other>, conjugating this
  DenseTensor conj() const;

  DenseTensor& operator*=(cplx s);
  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);

  bool all_finite() const;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<cplx> data_;
};

DenseTensor operator*(cplx s, DenseTensor t);
DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);

std::size_t shape_product(const DenseTensor::Shape& shape);

/// Sums over the paired axes axes_a[k] <-> axes_b[k]. Free axes of `a`
/// come first in their original order, then the free axes of `b`.
DenseTensor contract(const DenseTensor& a, const std::vector<std::size_t>& axes_a,
                     const DenseTensor& b, const std::vector<std::size_t>& axes_b);

struct TruncationParams {
  std::size_t chi_max = 100;
  /// Singular values with sigma^2 / sum(sigma^2) below this are dropped.
  double cutoff = 1e-12;
};

struct SvdResult {
  DenseTensor u;   // row axes + [k]
  std::vector<double> singular_values;
  DenseTensor vh;  // [k] + column axes
  double discarded_weight = 0.0;
};

/// SVD of `t` viewed as a matrix whose rows are its first `row_axes` axes.
SvdResult truncated_svd(const DenseTensor& t, std::size_t row_axes, const TruncationParams& params);

/// Same, for an arbitrary row/column partition of the axes.
SvdResult truncated_svd(const DenseTensor& t, const std::vector<std::size_t>& row_axes,
                        const std::vector<std::size_t>& col_axes, const TruncationParams& params);

struct QrResult {
  DenseTensor q;  // row axes + [k], left isometry
  DenseTensor r;  // [k] + column axes
};

/// Thin QR with rows = first `row_axes` axes. The diagonal of R is made real non-negative.
QrResult qr(const DenseTensor& t, std::size_t row_axes);

struct LqResult {
  DenseTensor l;  // row axes + [k]
  DenseTensor q;  // [k] + column axes, right isometry
};

LqResult lq(const DenseTensor& t, std::size_t row_axes);

}  // namespace qelm
