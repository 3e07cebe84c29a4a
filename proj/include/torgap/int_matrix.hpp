#pragma once

#include "torgap/errors.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace torgap {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// Dense matrix of unbounded integers, row-major.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  IntMatrix(std::initializer_list<std::initializer_list<long long>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto &r : rows) {
      if (r.size() != cols_)
        throw DimensionError("IntMatrix: ragged initializer");
      for (long long v : r) data_.emplace_back(v);
    }
  }

  static IntMatrix identity(std::size_t n) {
    IntMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  static IntMatrix from_rows(const std::vector<std::vector<BigInt>> &rows) {
    std::size_t r = rows.size(), c = r == 0 ? 0 : rows.front().size();
    IntMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
      if (rows[i].size() != c)
        throw DimensionError("IntMatrix: ragged rows");
      for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  // Each inner vector becomes one column.
  static IntMatrix from_columns(const std::vector<std::vector<BigInt>> &cols) {
    std::size_t c = cols.size(), r = c == 0 ? 0 : cols.front().size();
    IntMatrix m(r, c);
    for (std::size_t j = 0; j < c; ++j) {
      if (cols[j].size() != r)
        throw DimensionError("IntMatrix: ragged columns");
      for (std::size_t i = 0; i < r; ++i) m(i, j) = cols[j][i];
    }
    return m;
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] bool empty() const { return rows_ == 0 || cols_ == 0; }
  [[nodiscard]] bool square() const { return rows_ == cols_; }

  BigInt &operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  const BigInt &operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  [[nodiscard]] IntMatrix transpose() const {
    IntMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  [[nodiscard]] IntMatrix column(std::size_t j) const {
    IntMatrix c(rows_, 1);
    for (std::size_t i = 0; i < rows_; ++i) c(i, 0) = (*this)(i, j);
    return c;
  }

  [[nodiscard]] IntMatrix block(std::size_t r0, std::size_t c0,
                                std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_)
      throw DimensionError("IntMatrix::block out of range");
    IntMatrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t j = 0; j < cols_; ++j)
      std::swap((*this)(a, j), (*this)(b, j));
  }
  void swap_cols(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t i = 0; i < rows_; ++i)
      std::swap((*this)(i, a), (*this)(i, b));
  }
  // row[dst] += f * row[src]
  void add_row_multiple(std::size_t dst, std::size_t src, const BigInt &f) {
    if (f == 0) return;
    for (std::size_t j = 0; j < cols_; ++j)
      (*this)(dst, j) += f * (*this)(src, j);
  }
  void add_col_multiple(std::size_t dst, std::size_t src, const BigInt &f) {
    if (f == 0) return;
    for (std::size_t i = 0; i < rows_; ++i)
      (*this)(i, dst) += f * (*this)(i, src);
  }
  void negate_row(std::size_t r) {
    for (std::size_t j = 0; j < cols_; ++j) (*this)(r, j) = -(*this)(r, j);
  }

  [[nodiscard]] bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const BigInt &v) { return v == 0; });
  }

  [[nodiscard]] BigInt trace() const {
    if (!square()) throw DimensionError("trace of non-square matrix");
    BigInt t = 0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
  }

  // Bareiss fraction-free elimination.
  [[nodiscard]] BigInt determinant() const {
    if (!square()) throw DimensionError("determinant of non-square matrix");
    std::size_t n = rows_;
    if (n == 0) return 1;
    IntMatrix m = *this;
    BigInt prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (m(k, k) == 0) {
        std::size_t p = k + 1;
        while (p < n && m(p, k) == 0) ++p;
        if (p == n) return 0;
        m.swap_rows(k, p);
        sign = -sign;
      }
      for (std::size_t i = k + 1; i < n; ++i)
        for (std::size_t j = k + 1; j < n; ++j)
          m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
      prev = m(k, k);
    }
    return sign * m(n - 1, n - 1);
  }

  [[nodiscard]] std::size_t rank() const {
    IntMatrix m = *this;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols_ && r < rows_; ++c) {
      std::size_t p = r;
      while (p < rows_ && m(p, c) == 0) ++p;
      if (p == rows_) continue;
      m.swap_rows(r, p);
      for (std::size_t i = r + 1; i < rows_; ++i) {
        if (m(i, c) == 0) continue;
        BigInt a = m(r, c), b = m(i, c);
        for (std::size_t j = c; j < cols_; ++j)
          m(i, j) = m(i, j) * a - m(r, j) * b;
      }
      ++r;
    }
    return r;
  }

  template <class Scalar = double>
  [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
  to_eigen() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        out(i, j) = (*this)(i, j).template convert_to<Scalar>();
    return out;
  }

  friend bool operator==(const IntMatrix &a, const IntMatrix &b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  friend IntMatrix operator*(const IntMatrix &a, const IntMatrix &b) {
    if (a.cols_ != b.rows_)
      throw DimensionError("IntMatrix product: inner dimensions differ");
    IntMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const BigInt &aik = a(i, k);
        if (aik == 0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend IntMatrix operator+(const IntMatrix &a, const IntMatrix &b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw DimensionError("IntMatrix sum: shapes differ");
    IntMatrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] += b.data_[i];
    return c;
  }

  friend IntMatrix operator-(const IntMatrix &a, const IntMatrix &b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw DimensionError("IntMatrix difference: shapes differ");
    IntMatrix c = a;
    for (std::size_t i = 0; i < c.data_.size(); ++i) c.data_[i] -= b.data_[i];
    return c;
  }

  friend IntMatrix operator*(const BigInt &s, const IntMatrix &a) {
    IntMatrix c = a;
    for (auto &v : c.data_) v *= s;
    return c;
  }

  friend std::ostream &operator<<(std::ostream &os, const IntMatrix &m) {
    os << '[';
    for (std::size_t i = 0; i < m.rows_; ++i) {
      os << (i ? "; " : "");
      for (std::size_t j = 0; j < m.cols_; ++j) os << (j ? " " : "") << m(i, j);
    }
    return os << ']';
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<BigInt> data_;
};

// Horizontal concatenation, columns of `a` first.
inline IntMatrix lattice_sum(const IntMatrix &a, const IntMatrix &b) {
  if (a.rows() != b.rows())
    throw DimensionError("lattice_sum: row counts differ (" +
                         std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()) + ")");
  IntMatrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
  }
  return c;
}

// Exact inverse of a matrix with determinant +-1.
inline IntMatrix unimodular_inverse(const IntMatrix &a) {
  if (!a.square()) throw DimensionError("inverse of non-square matrix");
  std::size_t n = a.rows();
  std::vector<std::vector<BigRational>> m(n, std::vector<BigRational>(2 * n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m[i][j] = BigRational(a(i, j));
    m[i][n + i] = 1;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && m[p][c] == 0) ++p;
    if (p == n) throw PreconditionError("matrix is singular");
    std::swap(m[p], m[c]);
    BigRational inv = 1 / m[c][c];
    for (auto &v : m[c]) v *= inv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || m[i][c] == 0) continue;
      BigRational f = m[i][c];
      for (std::size_t j = c; j < 2 * n; ++j) m[i][j] -= f * m[c][j];
    }
  }
  IntMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const BigRational &v = m[i][n + j];
      if (boost::multiprecision::denominator(v) != 1)
        throw PreconditionError("matrix is not unimodular");
      out(i, j) = boost::multiprecision::numerator(v);
    }
  return out;
}

inline IntMatrix int_matrix_power(const IntMatrix &a, long long k) {
  if (!a.square())
    throw DimensionError("int_matrix_power: matrix is not square");
  IntMatrix base = a;
  if (k < 0) {
    BigInt d = a.determinant();
    if (d != 1 && d != -1)
      throw PreconditionError(
          "int_matrix_power: negative power of a matrix with |det| != 1");
    base = unimodular_inverse(a);
    k = -k;
  }
  IntMatrix result = IntMatrix::identity(a.rows());
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return result;
}

} // namespace torgap
