#include "qelm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace qelm {

std::size_t shape_product(const DenseTensor::Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)), data_(shape_product(shape_)) {}

DenseTensor::DenseTensor(Shape shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw std::invalid_argument("DenseTensor: shape product " + std::to_string(shape_product(shape_)) +
                                " does not match data length " + std::to_string(data_.size()));
  }
}

DenseTensor DenseTensor::from_matrix(const MatrixXcdR& m) {
  DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  t.as_matrix(1) = m;
  return t;
}

DenseTensor DenseTensor::vector(std::initializer_list<cplx> values) {
  return DenseTensor({values.size()}, std::vector<cplx>(values));
}

std::size_t DenseTensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) throw std::invalid_argument("DenseTensor: index rank mismatch");
  std::size_t off = 0;
  std::size_t k = 0;
  for (std::size_t i : index) {
    if (i >= shape_[k]) throw std::out_of_range("DenseTensor: index out of range");
    off = off * shape_[k] + i;
    ++k;
  }
  return off;
}

cplx& DenseTensor::operator()(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
const cplx& DenseTensor::operator()(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

DenseTensor DenseTensor::reshaped(Shape shape) const& {
  DenseTensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

DenseTensor DenseTensor::reshaped(Shape shape) && {
  if (shape_product(shape) != data_.size()) throw std::invalid_argument("DenseTensor::reshaped: size mismatch");
  shape_ = std::move(shape);
  return std::move(*this);
}

DenseTensor DenseTensor::permuted(const std::vector<std::size_t>& axes) const {
  const std::size_t r = rank();
  if (axes.size() != r) throw std::invalid_argument("DenseTensor::permuted: wrong number of axes");
  std::vector<bool> seen(r, false);
  for (std::size_t a : axes) {
    if (a >= r || seen[a]) throw std::invalid_argument("DenseTensor::permuted: not a permutation");
    seen[a] = true;
  }
  bool identity = true;
  for (std::size_t k = 0; k < r; ++k) identity = identity && axes[k] == k;
  if (identity || r < 2) return *this;

  Shape out_shape(r);
  for (std::size_t k = 0; k < r; ++k) out_shape[k] = shape_[axes[k]];
  DenseTensor out(out_shape);
  if (out.size() == 0) return out;

  // Fuse output axes that stay adjacent in the input, so the loop runs over
  // fewer, longer axes.
  std::vector<std::size_t> in_stride(r);
  std::size_t s = 1;
  for (std::size_t k = r; k-- > 0;) {
    in_stride[k] = s;
    s *= shape_[k];
  }
  std::vector<std::size_t> ext, stride;
  for (std::size_t k = 0; k < r; ++k) {
    if (shape_[axes[k]] == 1) continue;
    if (!ext.empty() && k > 0 && stride.back() == in_stride[axes[k]] * shape_[axes[k]]) {
      ext.back() *= shape_[axes[k]];
      stride.back() = in_stride[axes[k]];
      continue;
    }
    ext.push_back(shape_[axes[k]]);
    stride.push_back(in_stride[axes[k]]);
  }
  cplx* dst = out.data_.data();
  const cplx* src = data_.data();
  if (ext.size() <= 1) {
    std::copy(data_.begin(), data_.end(), out.data_.begin());
    return out;
  }

  // Odometer over the fused output; innermost axis handled as a strided copy.
  const std::size_t fr = ext.size();
  std::vector<std::size_t> idx(fr, 0);
  const std::size_t inner = ext[fr - 1];
  const std::size_t inner_stride = stride[fr - 1];
  std::size_t in_off = 0;
  const std::size_t outer = out.size() / inner;
  for (std::size_t o = 0; o < outer; ++o) {
    const cplx* p = src + in_off;
    if (inner_stride == 1) {
      std::copy(p, p + inner, dst);
    } else {
      for (std::size_t i = 0; i < inner; ++i) dst[i] = p[i * inner_stride];
    }
    dst += inner;
    for (std::size_t k = fr - 1; k-- > 0;) {
      ++idx[k];
      in_off += stride[k];
      if (idx[k] < ext[k]) break;
      in_off -= stride[k] * ext[k];
      idx[k] = 0;
    }
  }
  return out;
}

namespace {
std::pair<Eigen::Index, Eigen::Index> matrix_dims(const DenseTensor::Shape& shape, std::size_t row_axes) {
  if (row_axes > shape.size()) throw std::invalid_argument("as_matrix: row_axes exceeds rank");
  std::size_t rows = 1, cols = 1;
  for (std::size_t k = 0; k < shape.size(); ++k) (k < row_axes ? rows : cols) *= shape[k];
  return {static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
}  // namespace

Eigen::Map<MatrixXcdR> DenseTensor::as_matrix(std::size_t row_axes) {
  auto [r, c] = matrix_dims(shape_, row_axes);
  return {data_.data(), r, c};
}

Eigen::Map<const MatrixXcdR> DenseTensor::as_matrix(std::size_t row_axes) const {
  auto [r, c] = matrix_dims(shape_, row_axes);
  return {data_.data(), r, c};
}

Eigen::Map<Eigen::VectorXcd> DenseTensor::as_vector() {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::Map<const Eigen::VectorXcd> DenseTensor::as_vector() const {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

double DenseTensor::norm() const { return as_vector().norm(); }

cplx DenseTensor::dot(const DenseTensor& other) const {
  if (other.size() != size()) throw std::invalid_argument("DenseTensor::dot: size mismatch");
  return as_vector().dot(other.as_vector());
}

DenseTensor DenseTensor::conj() const {
  DenseTensor out = *this;
  for (auto& x : out.data_) x = std::conj(x);
  return out;
}

DenseTensor& DenseTensor::operator*=(cplx s) {
  as_vector() *= s;
  return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.shape_ != shape_) throw std::invalid_argument("DenseTensor +=: shape mismatch");
  as_vector() += other.as_vector();
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (other.shape_ != shape_) throw std::invalid_argument("DenseTensor -=: shape mismatch");
  as_vector() -= other.as_vector();
  return *this;
}

bool DenseTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

DenseTensor operator*(cplx s, DenseTensor t) { return t *= s; }
DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }

DenseTensor contract(const DenseTensor& a, const std::vector<std::size_t>& axes_a, const DenseTensor& b,
                     const std::vector<std::size_t>& axes_b) {
  if (axes_a.size() != axes_b.size()) throw std::invalid_argument("contract: axis lists differ in length");
  std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
  for (std::size_t k = 0; k < axes_a.size(); ++k) {
    const std::size_t ia = axes_a[k], ib = axes_b[k];
    if (ia >= a.rank() || ib >= b.rank()) throw std::invalid_argument("contract: axis out of range");
    if (used_a[ia] || used_b[ib]) throw std::invalid_argument("contract: repeated axis");
    if (a.extent(ia) != b.extent(ib)) {
      throw std::invalid_argument("contract: extent mismatch on paired axes (" + std::to_string(a.extent(ia)) +
                                  " vs " + std::to_string(b.extent(ib)) + ")");
    }
    used_a[ia] = used_b[ib] = true;
  }

  std::vector<std::size_t> perm_a, perm_b;
  DenseTensor::Shape out_shape;
  for (std::size_t k = 0; k < a.rank(); ++k) {
    if (!used_a[k]) {
      perm_a.push_back(k);
      out_shape.push_back(a.extent(k));
    }
  }
  const std::size_t free_a = perm_a.size();
  perm_a.insert(perm_a.end(), axes_a.begin(), axes_a.end());
  perm_b = axes_b;
  for (std::size_t k = 0; k < b.rank(); ++k) {
    if (!used_b[k]) {
      perm_b.push_back(k);
      out_shape.push_back(b.extent(k));
    }
  }

  auto is_identity = [](const std::vector<std::size_t>& p) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] != k) return false;
    }
    return true;
  };
  std::optional<DenseTensor> ap_store, bp_store;
  if (!is_identity(perm_a)) ap_store = a.permuted(perm_a);
  if (!is_identity(perm_b)) bp_store = b.permuted(perm_b);
  const DenseTensor& ap = ap_store ? *ap_store : a;
  const DenseTensor& bp = bp_store ? *bp_store : b;
  DenseTensor out(out_shape);
  auto ma = ap.as_matrix(free_a);
  auto mb = bp.as_matrix(axes_b.size());
  auto mo = out.as_matrix(free_a);
  mo.noalias() = ma * mb;
  return out;
}

SvdResult truncated_svd(const DenseTensor& t, std::size_t row_axes, const TruncationParams& params) {
  if (row_axes == 0 || row_axes >= t.rank()) {
    throw std::invalid_argument("truncated_svd: both sides of the partition must be nonempty");
  }
  if (params.chi_max == 0) throw std::invalid_argument("truncated_svd: chi_max must be positive");
  if (params.cutoff < 0.0) throw std::invalid_argument("truncated_svd: cutoff must be non-negative");

  DenseTensor::Shape row_shape(t.shape().begin(), t.shape().begin() + static_cast<std::ptrdiff_t>(row_axes));
  DenseTensor::Shape col_shape(t.shape().begin() + static_cast<std::ptrdiff_t>(row_axes), t.shape().end());
  const auto m = t.as_matrix(row_axes);
  const Eigen::Index rows = m.rows(), cols = m.cols();

  SvdResult res;
  auto finish = [&](const MatrixXcdR& u, const MatrixXcdR& vh) {
    auto us = row_shape;
    us.push_back(static_cast<std::size_t>(u.cols()));
    DenseTensor::Shape vs{static_cast<std::size_t>(vh.rows())};
    vs.insert(vs.end(), col_shape.begin(), col_shape.end());
    res.u = DenseTensor(us);
    res.u.as_matrix(row_axes) = u;
    res.vh = DenseTensor(vs);
    res.vh.as_matrix(1) = vh;
  };

  const double total = m.squaredNorm();
  if (total == 0.0 || rows == 0 || cols == 0) {
    MatrixXcdR u = MatrixXcdR::Zero(rows, 1);
    MatrixXcdR vh = MatrixXcdR::Zero(1, cols);
    if (rows > 0) u(0, 0) = 1.0;
    if (cols > 0) vh(0, 0) = 1.0;
    res.singular_values = {0.0};
    finish(u, vh);
    return res;
  }

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  std::size_t keep = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) * s(k) / total >= params.cutoff) keep = static_cast<std::size_t>(k) + 1;
  }
  keep = std::clamp<std::size_t>(keep, 1, params.chi_max);
  keep = std::min<std::size_t>(keep, static_cast<std::size_t>(s.size()));

  double dropped = 0.0;
  for (Eigen::Index k = static_cast<Eigen::Index>(keep); k < s.size(); ++k) dropped += s(k) * s(k);
  res.discarded_weight = dropped / total;
  res.singular_values.assign(s.data(), s.data() + keep);
  const auto k = static_cast<Eigen::Index>(keep);
  finish(svd.matrixU().leftCols(k), svd.matrixV().leftCols(k).adjoint());
  return res;
}

SvdResult truncated_svd(const DenseTensor& t, const std::vector<std::size_t>& row_axes,
                        const std::vector<std::size_t>& col_axes, const TruncationParams& params) {
  std::vector<std::size_t> perm = row_axes;
  perm.insert(perm.end(), col_axes.begin(), col_axes.end());
  return truncated_svd(t.permuted(perm), row_axes.size(), params);
}

QrResult qr(const DenseTensor& t, std::size_t row_axes) {
  const auto m = t.as_matrix(row_axes);
  const Eigen::Index rows = m.rows(), cols = m.cols(), k = std::min(rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXcd> dec(m);
  Eigen::MatrixXcd q = dec.householderQ() * Eigen::MatrixXcd::Identity(rows, k);
  Eigen::MatrixXcd r = dec.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) {
      const cplx phase = r(j, j) / mag;
      q.col(j) *= phase;
      r.row(j) *= std::conj(phase);
    }
  }
  DenseTensor::Shape qs(t.shape().begin(), t.shape().begin() + static_cast<std::ptrdiff_t>(row_axes));
  qs.push_back(static_cast<std::size_t>(k));
  DenseTensor::Shape rs{static_cast<std::size_t>(k)};
  rs.insert(rs.end(), t.shape().begin() + static_cast<std::ptrdiff_t>(row_axes), t.shape().end());
  QrResult out{DenseTensor(qs), DenseTensor(rs)};
  out.q.as_matrix(row_axes) = q;
  out.r.as_matrix(1) = r;
  return out;
}

LqResult lq(const DenseTensor& t, std::size_t row_axes) {
  const auto m = t.as_matrix(row_axes);
  const Eigen::Index rows = m.rows(), cols = m.cols(), k = std::min(rows, cols);
  Eigen::MatrixXcd madj = m.adjoint();
  Eigen::HouseholderQR<Eigen::MatrixXcd> dec(madj);
  Eigen::MatrixXcd q = dec.householderQ() * Eigen::MatrixXcd::Identity(cols, k);
  Eigen::MatrixXcd r = dec.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) {
      const cplx phase = r(j, j) / mag;
      q.col(j) *= phase;
      r.row(j) *= std::conj(phase);
    }
  }
  DenseTensor::Shape ls(t.shape().begin(), t.shape().begin() + static_cast<std::ptrdiff_t>(row_axes));
  ls.push_back(static_cast<std::size_t>(k));
  DenseTensor::Shape qs{static_cast<std::size_t>(k)};
  qs.insert(qs.end(), t.shape().begin() + static_cast<std::ptrdiff_t>(row_axes), t.shape().end());
  LqResult out{DenseTensor(ls), DenseTensor(qs)};
  out.l.as_matrix(row_axes) = r.adjoint();
  out.q.as_matrix(1) = q.adjoint();
  return out;
}

}  // namespace qelm
