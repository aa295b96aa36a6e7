#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cortex/error.hpp"
#include "cortex/parallel.hpp"

namespace cortex {

// Extents of a dense row-major array. Rank 1..4, every extent >= 1.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::int64_t> dims)
      : Shape(std::vector<std::int64_t>(dims)) {}
  explicit Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty() || dims_.size() > 4)
      throw ShapeError("shape rank must be 1..4, got " + std::to_string(dims_.size()));
    for (auto d : dims_) {
      if (d < 1) throw ShapeError("shape extents must be >= 1, got " + str_of(dims_));
    }
  }

  int rank() const { return static_cast<int>(dims_.size()); }
  std::int64_t extent(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
  std::int64_t operator[](int i) const { return extent(i); }
  const std::vector<std::int64_t>& dims() const { return dims_; }

  std::int64_t count() const {
    std::int64_t n = 1;
    for (auto d : dims_) n *= d;
    return n;
  }

  bool operator==(const Shape& o) const { return dims_ == o.dims_; }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const { return str_of(dims_); }

 private:
  static std::string str_of(const std::vector<std::int64_t>& d) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
    os << "]";
    return os.str();
  }
  std::vector<std::int64_t> dims_;
};

// Dense row-major N-d array of float or double. Treated as an immutable value
// by every operation in the library: kernels build a fresh tensor and return
// it, so tensors can be shared freely across threads.
template <std::floating_point T>
class Tensor {
 public:
  Tensor() = default;  // empty placeholder; any real use requires a shape

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)),
        data_(static_cast<std::size_t>(shape_.count()), T(0)) {}

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_.count())
      throw ShapeError("data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
  }

  static Tensor zeros(const Shape& s) { return Tensor(s); }

  static Tensor full(const Shape& s, T value) {
    Tensor t(s);
    for (auto& x : t.data_) x = value;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  T operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }

  T& at(std::int64_t i0) { return data_[check_index(offset({i0}))]; }
  T& at(std::int64_t i0, std::int64_t i1) { return data_[check_index(offset({i0, i1}))]; }
  T& at(std::int64_t i0, std::int64_t i1, std::int64_t i2) {
    return data_[check_index(offset({i0, i1, i2}))];
  }
  T& at(std::int64_t i0, std::int64_t i1, std::int64_t i2, std::int64_t i3) {
    return data_[check_index(offset({i0, i1, i2, i3}))];
  }
  T at(std::int64_t i0) const { return data_[check_index(offset({i0}))]; }
  T at(std::int64_t i0, std::int64_t i1) const { return data_[check_index(offset({i0, i1}))]; }
  T at(std::int64_t i0, std::int64_t i1, std::int64_t i2) const {
    return data_[check_index(offset({i0, i1, i2}))];
  }
  T at(std::int64_t i0, std::int64_t i1, std::int64_t i2, std::int64_t i3) const {
    return data_[check_index(offset({i0, i1, i2, i3}))];
  }

  bool all_finite() const {
    for (auto x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  std::int64_t offset(std::initializer_list<std::int64_t> idx) const {
    if (static_cast<int>(idx.size()) != shape_.rank())
      throw ShapeError("index rank does not match tensor rank");
    std::int64_t off = 0;
    int i = 0;
    for (auto v : idx) {
      if (v < 0 || v >= shape_.extent(i))
        throw ShapeError("index out of bounds for shape " + shape_.str());
      off = off * shape_.extent(i) + v;
      ++i;
    }
    return off;
  }
  std::size_t check_index(std::int64_t off) const { return static_cast<std::size_t>(off); }

  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <std::floating_point T>
Tensor<T> zeros(const Shape& shape) {
  return Tensor<T>::zeros(shape);
}

// out[i] = f(in[i]) over the flat row-major data; shape is preserved.
template <std::floating_point T, typename F>
Tensor<T> map_elementwise(const Tensor<T>& t, F f) {
  Tensor<T> out(t.shape());
  const T* in = t.data().data();
  T* o = out.data().data();
  const std::int64_t n = t.size();
  parallel_for(n, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) o[i] = f(in[i]);
  });
  return out;
}

// Same flat data, new extents; element counts must agree.
template <std::floating_point T>
Tensor<T> reshape(const Tensor<T>& t, const Shape& new_shape) {
  if (new_shape.count() != t.size())
    throw ShapeError("reshape from " + t.shape().str() + " to " + new_shape.str() +
                     " changes element count");
  return Tensor<T>(new_shape, std::vector<T>(t.data().begin(), t.data().end()));
}

namespace detail {

// Dot product with eight fixed partial-sum lanes and a fixed reduction tree.
// The lane structure lets the compiler vectorize under strict FP semantics
// while keeping the summation order independent of the surrounding code, so
// results stay bit-reproducible.
template <std::floating_point T>
T vdot(const T* a, const T* b, std::int64_t n) {
  constexpr std::int64_t kLanes = 8;
  T lanes[kLanes] = {};
  std::int64_t p = 0;
  for (; p + kLanes <= n; p += kLanes)
    for (std::int64_t l = 0; l < kLanes; ++l) lanes[l] += a[p + l] * b[p + l];
  T tail = 0;
  for (; p < n; ++p) tail += a[p] * b[p];
  const T s01 = lanes[0] + lanes[1];
  const T s23 = lanes[2] + lanes[3];
  const T s45 = lanes[4] + lanes[5];
  const T s67 = lanes[6] + lanes[7];
  return ((s01 + s23) + (s45 + s67)) + tail;
}

// C[m,n] += A[m,k] * B[k,n], all row-major and dense. Each output cell
// accumulates over p = 0..k-1 in order, so results do not depend on the
// 4-row blocking or on how callers chunk the row range.
template <std::floating_point T>
void gemm_acc_rows(const T* a, const T* b, T* c, std::int64_t k, std::int64_t n,
                   std::int64_t row_begin, std::int64_t row_end) {
  std::int64_t i = row_begin;
  for (; i + 4 <= row_end; i += 4) {
    const T* a0 = a + i * k;
    const T* a1 = a0 + k;
    const T* a2 = a1 + k;
    const T* a3 = a2 + k;
    T* c0 = c + i * n;
    T* c1 = c0 + n;
    T* c2 = c1 + n;
    T* c3 = c2 + n;
    for (std::int64_t p = 0; p < k; ++p) {
      const T* br = b + p * n;
      const T w0 = a0[p], w1 = a1[p], w2 = a2[p], w3 = a3[p];
      for (std::int64_t j = 0; j < n; ++j) {
        const T bv = br[j];
        c0[j] += w0 * bv;
        c1[j] += w1 * bv;
        c2[j] += w2 * bv;
        c3[j] += w3 * bv;
      }
    }
  }
  for (; i < row_end; ++i) {
    const T* ar = a + i * k;
    T* cr = c + i * n;
    for (std::int64_t p = 0; p < k; ++p) {
      const T w = ar[p];
      const T* br = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) cr[j] += w * br[j];
    }
  }
}

template <std::floating_point T>
void gemm_acc(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
              std::int64_t n) {
  parallel_for(m, [&](std::int64_t b0, std::int64_t e0) {
    gemm_acc_rows(a, b, c, k, n, b0, e0);
  });
}

}  // namespace detail

// c[i][j] = sum_p a[i][p] * b[p][j]. Rank-2 operands only.
template <std::floating_point T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2)
    throw ShapeError("matmul requires rank-2 tensors, got " + a.shape().str() + " and " +
                     b.shape().str());
  if (a.shape().extent(1) != b.shape().extent(0))
    throw ShapeError("matmul inner dimensions differ: " + a.shape().str() + " vs " +
                     b.shape().str());
  const std::int64_t m = a.shape().extent(0);
  const std::int64_t k = a.shape().extent(1);
  const std::int64_t n = b.shape().extent(1);
  Tensor<T> c(Shape{m, n});
  detail::gemm_acc(a.data().data(), b.data().data(), c.data().data(), m, k, n);
  return c;
}

}  // namespace cortex
