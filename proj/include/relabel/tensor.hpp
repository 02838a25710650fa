#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "relabel/errors.hpp"
#include "relabel/rng.hpp"

namespace relabel::autodiff {

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using FlatArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using Dims = std::vector<int>;

inline std::int64_t dim_count(const Dims& dims) {
  std::int64_t n = 1;
  for (int d : dims) {
    if (d < 0) throw shape_error("negative dimension");
    n *= d;
  }
  return n;
}

inline std::string dims_to_string(const Dims& dims) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
  os << "]";
  return os.str();
}

// Dense tensor with row-major storage. Rank 0..2 covers almost everything in
// this codebase; conv kernels are the one rank-3 case. The matrix view maps
// rank-1 tensors to a single row so vectors compose with matmul directly.
template <typename Scalar>
struct Tensor {
  Dims dims;
  FlatArray<Scalar> v;

  Tensor() = default;
  explicit Tensor(Dims d) : dims(std::move(d)), v(dim_count(dims)) { v.setZero(); }

  static Tensor zeros(Dims d) { return Tensor(std::move(d)); }

  static Tensor full(Dims d, Scalar x) {
    Tensor t(std::move(d));
    t.v.setConstant(x);
    return t;
  }

  static Tensor scalar(Scalar x) { return full({1}, x); }

  static Tensor from(Dims d, std::initializer_list<Scalar> xs) {
    Tensor t(std::move(d));
    if (static_cast<std::int64_t>(xs.size()) != t.size())
      throw shape_error("initializer size does not match " + dims_to_string(t.dims));
    std::int64_t i = 0;
    for (Scalar x : xs) t.v(i++) = x;
    return t;
  }

  static Tensor uniform(Dims d, Scalar lo, Scalar hi, Rng& rng) {
    Tensor t(std::move(d));
    for (std::int64_t i = 0; i < t.size(); ++i)
      t.v(i) = static_cast<Scalar>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
    return t;
  }

  std::int64_t size() const { return v.size(); }
  int rank() const { return static_cast<int>(dims.size()); }

  int rows() const {
    if (rank() == 2) return dims[0];
    if (rank() <= 1) return 1;
    throw shape_error("rows() on rank-" + std::to_string(rank()) + " tensor");
  }

  int cols() const {
    if (rank() == 2) return dims[1];
    if (rank() == 1) return dims[0];
    if (rank() == 0) return 1;
    throw shape_error("cols() on rank-" + std::to_string(rank()) + " tensor");
  }

  Scalar& at(int i) { return v(i); }
  Scalar at(int i) const { return v(i); }
  Scalar& at(int r, int c) { return v(static_cast<std::int64_t>(r) * cols() + c); }
  Scalar at(int r, int c) const { return v(static_cast<std::int64_t>(r) * cols() + c); }

  // Rank<=2 matrix view (rank-1 becomes a 1xN row).
  Eigen::Map<RowMat<Scalar>> mat() {
    return Eigen::Map<RowMat<Scalar>>(v.data(), rows(), cols());
  }
  Eigen::Map<const RowMat<Scalar>> mat() const {
    return Eigen::Map<const RowMat<Scalar>>(v.data(), rows(), cols());
  }

  // View of a contiguous slab as an arbitrary matrix; used for rank-3 kernels.
  Eigen::Map<RowMat<Scalar>> slab(std::int64_t offset, int r, int c) {
    return Eigen::Map<RowMat<Scalar>>(v.data() + offset, r, c);
  }
  Eigen::Map<const RowMat<Scalar>> slab(std::int64_t offset, int r, int c) const {
    return Eigen::Map<const RowMat<Scalar>>(v.data() + offset, r, c);
  }

  bool same_shape(const Tensor& o) const { return dims == o.dims; }
  bool all_finite() const { return v.isFinite().all(); }
};

using Tensord = Tensor<double>;
using Tensorf = Tensor<float>;

}  // namespace relabel::autodiff
