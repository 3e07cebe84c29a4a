#pragma once

#include "torgap/int_matrix.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace torgap {

struct SmithForm {
  IntMatrix left;            // unimodular, rows x rows
  std::vector<BigInt> diag;  // length min(rows, cols)
  IntMatrix right;           // unimodular, cols x cols

  // diag embedded in a rows x cols matrix
  [[nodiscard]] IntMatrix diagonal_matrix() const {
    IntMatrix d(left.rows(), right.rows());
    for (std::size_t i = 0; i < diag.size(); ++i) d(i, i) = diag[i];
    return d;
  }
};

namespace detail {

inline BigInt abs_big(const BigInt &v) { return v < 0 ? BigInt(-v) : v; }

// Reduces s in place. The transforms are accumulated only when the pointers
// are non-null, so the factor-only path avoids the two square matrices.
inline void smith_reduce(IntMatrix &s, IntMatrix *u, IntMatrix *v) {
  const std::size_t m = s.rows(), n = s.cols();
  const std::size_t steps = std::min(m, n);

  auto row_swap = [&](std::size_t a, std::size_t b) {
    s.swap_rows(a, b);
    if (u) u->swap_rows(a, b);
  };
  auto col_swap = [&](std::size_t a, std::size_t b) {
    s.swap_cols(a, b);
    if (v) v->swap_cols(a, b);
  };
  auto row_add = [&](std::size_t dst, std::size_t src, const BigInt &f) {
    s.add_row_multiple(dst, src, f);
    if (u) u->add_row_multiple(dst, src, f);
  };
  auto col_add = [&](std::size_t dst, std::size_t src, const BigInt &f) {
    s.add_col_multiple(dst, src, f);
    if (v) v->add_col_multiple(dst, src, f);
  };

  for (std::size_t t = 0; t < steps; ++t) {
    // smallest nonzero magnitude in the trailing block
    std::optional<std::pair<std::size_t, std::size_t>> best;
    BigInt best_abs;
    for (std::size_t i = t; i < m; ++i)
      for (std::size_t j = t; j < n; ++j) {
        if (s(i, j) == 0) continue;
        BigInt a = abs_big(s(i, j));
        if (!best || a < best_abs) {
          best = {i, j};
          best_abs = a;
        }
      }
    if (!best) break;
    row_swap(t, best->first);
    col_swap(t, best->second);

    for (;;) {
      bool clean = true;
      for (std::size_t i = t + 1; i < m; ++i) {
        if (s(i, t) == 0) continue;
        BigInt q = s(i, t) / s(t, t);
        row_add(i, t, -q);
        if (s(i, t) != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        if (s(t, j) == 0) continue;
        BigInt q = s(t, j) / s(t, t);
        col_add(j, t, -q);
        if (s(t, j) != 0) clean = false;
      }
      if (!clean) {
        // a remainder smaller than the pivot survived; move it to the pivot
        std::size_t bi = t, bj = t;
        BigInt ba = abs_big(s(t, t));
        for (std::size_t i = t + 1; i < m; ++i)
          if (s(i, t) != 0 && abs_big(s(i, t)) < ba) {
            ba = abs_big(s(i, t));
            bi = i;
            bj = t;
          }
        for (std::size_t j = t + 1; j < n; ++j)
          if (s(t, j) != 0 && abs_big(s(t, j)) < ba) {
            ba = abs_big(s(t, j));
            bi = t;
            bj = j;
          }
        row_swap(t, bi);
        col_swap(t, bj);
        continue;
      }
      // row and column are clear; enforce divisibility of the rest
      std::optional<std::size_t> bad_row;
      for (std::size_t i = t + 1; i < m && !bad_row; ++i)
        for (std::size_t j = t + 1; j < n; ++j)
          if (s(i, j) % s(t, t) != 0) {
            bad_row = i;
            break;
          }
      if (!bad_row) break;
      row_add(t, *bad_row, BigInt(1));
    }
    if (s(t, t) < 0) {
      s.negate_row(t);
      if (u) u->negate_row(t);
    }
  }
}

} // namespace detail

inline SmithForm smith_normal_form(const IntMatrix &mat) {
  if (mat.empty()) throw DimensionError("smith_normal_form: empty matrix");
  IntMatrix s = mat;
  SmithForm out{IntMatrix::identity(mat.rows()), {},
                IntMatrix::identity(mat.cols())};
  detail::smith_reduce(s, &out.left, &out.right);
  std::size_t k = std::min(mat.rows(), mat.cols());
  out.diag.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.diag[i] = s(i, i);
  return out;
}

// Diagonal of the Smith form without transforms.
inline std::vector<BigInt> smith_diagonal(const IntMatrix &mat) {
  IntMatrix s = mat;
  detail::smith_reduce(s, nullptr, nullptr);
  std::size_t k = std::min(mat.rows(), mat.cols());
  std::vector<BigInt> d(k);
  for (std::size_t i = 0; i < k; ++i) d[i] = s(i, i);
  return d;
}

class FiniteAbelianGroup {
 public:
  FiniteAbelianGroup() = default;
  FiniteAbelianGroup(std::vector<BigInt> factors, std::size_t free_rank)
      : factors_(std::move(factors)), free_rank_(free_rank) {
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (factors_[i] < 2)
        throw PreconditionError("invariant factors must be >= 2");
      if (i + 1 < factors_.size() && factors_[i + 1] % factors_[i] != 0)
        throw PreconditionError("invariant factors must form a divisor chain");
    }
  }

  [[nodiscard]] const std::vector<BigInt> &invariant_factors() const {
    return factors_;
  }
  [[nodiscard]] std::size_t free_rank() const { return free_rank_; }
  [[nodiscard]] bool is_finite() const { return free_rank_ == 0; }
  [[nodiscard]] bool is_trivial() const {
    return free_rank_ == 0 && factors_.empty();
  }

  // Order of the group; empty when there is a free part.
  [[nodiscard]] std::optional<BigInt> order() const {
    if (free_rank_ != 0) return std::nullopt;
    return torsion_order();
  }

  [[nodiscard]] BigInt torsion_order() const {
    BigInt o = 1;
    for (const auto &f : factors_) o *= f;
    return o;
  }

  // Natural log of the torsion order, safe for orders beyond double range.
  [[nodiscard]] double log_torsion_order() const {
    double s = 0;
    for (const auto &f : factors_) s += log_big(f);
    return s;
  }

  [[nodiscard]] std::string to_string() const {
    if (is_trivial()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto &f : factors_) {
      os << (first ? "" : " + ") << "Z/" << f;
      first = false;
    }
    for (std::size_t i = 0; i < free_rank_; ++i) {
      os << (first ? "" : " + ") << "Z";
      first = false;
    }
    return os.str();
  }

  friend bool operator==(const FiniteAbelianGroup &a,
                         const FiniteAbelianGroup &b) {
    return a.free_rank_ == b.free_rank_ && a.factors_ == b.factors_;
  }

  static double log_big(const BigInt &v) {
    BigInt a = detail::abs_big(v);
    std::size_t bits = a == 0 ? 0 : boost::multiprecision::msb(a) + 1;
    if (bits <= 900) return std::log(a.convert_to<double>());
    std::size_t shift = bits - 64;
    BigInt top = a >> shift;
    return std::log(top.convert_to<double>()) +
           static_cast<double>(shift) * std::log(2.0);
  }

 private:
  std::vector<BigInt> factors_;
  std::size_t free_rank_ = 0;
};

// Z^ambient_rank modulo the column span of `generators`.
inline FiniteAbelianGroup quotient_group(const IntMatrix &generators,
                                         std::size_t ambient_rank) {
  if (generators.cols() > 0 && generators.rows() != ambient_rank)
    throw DimensionError("quotient_group: generators have " +
                         std::to_string(generators.rows()) +
                         " rows, expected " + std::to_string(ambient_rank));
  if (generators.cols() == 0 || ambient_rank == 0)
    return FiniteAbelianGroup({}, ambient_rank);
  std::vector<BigInt> diag = smith_diagonal(generators);
  std::vector<BigInt> factors;
  std::size_t rank = 0;
  for (const auto &d : diag) {
    if (d != 0) ++rank;
    if (d > 1) factors.push_back(d);
  }
  return FiniteAbelianGroup(std::move(factors), ambient_rank - rank);
}

} // namespace torgap
