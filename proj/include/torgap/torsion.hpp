#pragma once

#include "torgap/families.hpp"
#include "torgap/smith.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace torgap {

// A_0 = 0, A_1 = 1, A_{i+1} = 6 A_i - A_{i-1}
inline BigInt recurrence_A(std::size_t i) {
  BigInt prev = 0, cur = 1;
  if (i == 0) return prev;
  for (std::size_t k = 1; k < i; ++k) {
    BigInt next = 6 * cur - prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

// Z^{2g} / (plus + A^{tN} minus), computed in the frame of slice 0.
inline FiniteAbelianGroup glued_torsion(const GluingFamily &fam, long long n) {
  if (n < 0) throw PreconditionError("glued_torsion: N must be >= 0");
  const auto &act = fam.action;
  IntMatrix twisted =
      act.power(fam.twist_exponent_per_step * n) * fam.pair.minus_basis();
  return quotient_group(lattice_sum(fam.pair.plus_basis(), twisted), act.dim());
}

// Z^{2g} / (A^{tN/2} plus + A^{-tN/2} minus), the frame of the middle slice.
inline FiniteAbelianGroup symmetric_frame_torsion(const GluingFamily &fam,
                                                  long long n) {
  if (n < 0) throw PreconditionError("symmetric_frame_torsion: N must be >= 0");
  if (fam.twist_exponent_per_step % 2 != 0)
    throw PreconditionError("symmetric frame needs an even twist exponent");
  long long h = fam.twist_exponent_per_step / 2 * n;
  const auto &act = fam.action;
  return quotient_group(lattice_sum(act.power(h) * fam.pair.plus_basis(),
                                    act.power(-h) * fam.pair.minus_basis()),
                        act.dim());
}

// Z^{2g} / (minus + A^{tN} plus): the slice-0 frame with the roles swapped.
inline FiniteAbelianGroup swapped_torsion(const GluingFamily &fam,
                                          long long n) {
  const auto &act = fam.action;
  IntMatrix twisted =
      act.power(fam.twist_exponent_per_step * n) * fam.pair.plus_basis();
  return quotient_group(lattice_sum(fam.pair.minus_basis(), twisted),
                        act.dim());
}

struct RateReport {
  std::vector<long long> n_values;
  std::vector<double> log_orders;  // log #H_1
  std::vector<double> rates;       // log #H_1 / N
  double tail_estimate = 0;        // last per-step increment of log #H_1
  std::optional<long long> infinite_at;
};

inline RateReport growth_rate(const GluingFamily &fam, long long n_max) {
  if (n_max < 1) throw PreconditionError("growth_rate: N_max must be >= 1");
  RateReport r;
  double prev = 0;
  for (long long n = 0; n <= n_max; ++n) {
    FiniteAbelianGroup h = glued_torsion(fam, n);
    if (!h.is_finite()) {
      if (n == 0) continue;  // the untwisted gluing may have a free part
      r.infinite_at = n;
      return r;
    }
    double lo = h.log_torsion_order();
    if (n >= 1) {
      r.n_values.push_back(n);
      r.log_orders.push_back(lo);
      r.rates.push_back(lo / static_cast<double>(n));
    }
    if (n == 1) {
      r.tail_estimate = lo;
    } else if (n > 1) {
      r.tail_estimate = lo - prev;
    }
    prev = lo;
  }
  return r;
}

struct ShortestVector {
  BigInt norm_squared;
  std::vector<BigInt> coefficients;  // in the given basis
  std::size_t visited = 0;
};

// Exact shortest nonzero vector of a full-rank integer lattice (columns of
// basis) by Fincke-Pohst enumeration. The per-coordinate intervals come from
// the Cholesky factor of the Gram matrix, so the search box always contains
// a minimizer.
inline ShortestVector shortest_vector(const IntMatrix &basis) {
  const std::size_t n = basis.cols();
  if (n == 0 || basis.rank() != n)
    throw PreconditionError("shortest_vector: basis must have full column rank");
  IntMatrix gram_exact = basis.transpose() * basis;
  using LD = long double;
  Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic> gram =
      gram_exact.to_eigen<LD>();
  Eigen::LLT<Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>> llt(gram);
  Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic> r =
      llt.matrixU();  // gram = r^T r

  auto exact_norm = [&](const std::vector<BigInt> &x) {
    BigInt s = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) s += x[i] * gram_exact(i, j) * x[j];
    return s;
  };

  ShortestVector best;
  // start from the shortest basis vector
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<BigInt> e(n);
    e[j] = 1;
    BigInt v = exact_norm(e);
    if (best.coefficients.empty() || v < best.norm_squared) {
      best.norm_squared = v;
      best.coefficients = e;
    }
  }
  LD radius2 = best.norm_squared.convert_to<LD>() * (1 + 1e-12L);

  std::vector<long long> x(n, 0);
  // depth-first over coordinates n-1 .. 0
  std::function<void(std::ptrdiff_t, LD)> recurse = [&](std::ptrdiff_t i,
                                                        LD partial) {
    LD center = 0;
    for (std::size_t j = static_cast<std::size_t>(i) + 1; j < n; ++j)
      center -= r(i, j) * static_cast<LD>(x[j]);
    center /= r(i, i);
    LD slack = (radius2 - partial) / (r(i, i) * r(i, i));
    if (slack < 0) return;
    LD half = std::sqrt(slack);
    auto lo = static_cast<long long>(std::ceil(center - half));
    auto hi = static_cast<long long>(std::floor(center + half));
    for (long long v = lo; v <= hi; ++v) {
      x[i] = v;
      LD d = (static_cast<LD>(v) - center) * r(i, i);
      LD next = partial + d * d;
      if (next > radius2) continue;
      if (i == 0) {
        ++best.visited;
        bool zero = std::all_of(x.begin(), x.end(),
                                [](long long t) { return t == 0; });
        if (zero) continue;
        std::vector<BigInt> xb(x.begin(), x.end());
        BigInt nv = exact_norm(xb);
        if (nv < best.norm_squared) {
          best.norm_squared = nv;
          best.coefficients = xb;
          radius2 = nv.convert_to<LD>() * (1 + 1e-12L);
        }
      } else {
        recurse(i - 1, next);
      }
    }
    x[i] = 0;
  };
  recurse(static_cast<std::ptrdiff_t>(n) - 1, 0);
  return best;
}

struct InterfaceSpec {
  IntMatrix left_kill;   // killed by the block on the left, its own frame
  IntMatrix right_kill;  // killed by the block on the right, its own frame
  IntMatrix twist;       // identifies the right frame with the left frame
};

struct BlockChainSpec {
  std::size_t block_count = 0;
  std::size_t genus = 0;
  std::vector<InterfaceSpec> interfaces;  // block_count - 1 entries

  void validate_shape() const {
    if (block_count < 1) throw PreconditionError("chain needs >= 1 block");
    if (interfaces.size() + 1 != block_count)
      throw DimensionError("chain needs block_count - 1 interfaces");
    const std::size_t d = 2 * genus;
    for (const auto &f : interfaces) {
      if (f.left_kill.rows() != d || f.right_kill.rows() != d ||
          f.twist.rows() != d || f.twist.cols() != d)
        throw DimensionError("interface data has the wrong size");
      BigInt det = f.twist.determinant();
      if (det != 1 && det != -1)
        throw PreconditionError("interface twist is not unimodular");
    }
  }

  // Presentation of one interface: left kill plus transported right kill.
  [[nodiscard]] IntMatrix interface_relations(std::size_t i) const {
    const auto &f = interfaces.at(i);
    return lattice_sum(f.left_kill, f.twist * f.right_kill);
  }
};

inline BlockChainSpec uniform_chain(std::size_t blocks, const IntMatrix &left,
                                    const IntMatrix &right,
                                    const IntMatrix &twist) {
  BlockChainSpec s;
  s.block_count = blocks;
  s.genus = left.rows() / 2;
  for (std::size_t i = 0; i + 1 < blocks; ++i)
    s.interfaces.push_back({left, right, twist});
  s.validate_shape();
  return s;
}

// Invariant-factor form of the direct sum of cyclic groups Z/f.
inline FiniteAbelianGroup combine_torsion(const std::vector<BigInt> &factors,
                                          std::size_t free_rank) {
  if (factors.empty()) return FiniteAbelianGroup({}, free_rank);
  IntMatrix diag(factors.size(), factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) diag(i, i) = factors[i];
  FiniteAbelianGroup t = quotient_group(diag, factors.size());
  return FiniteAbelianGroup(t.invariant_factors(), free_rank);
}

struct ChainHomologyReport {
  FiniteAbelianGroup group;
  std::vector<bool> local_killing;          // per block
  std::vector<std::size_t> interface_defect;  // 2g - rank per interface
};

inline ChainHomologyReport chain_homology(const BlockChainSpec &spec) {
  spec.validate_shape();
  const std::size_t d = 2 * spec.genus;
  const std::size_t m = spec.interfaces.size();
  ChainHomologyReport rep;
  rep.interface_defect.resize(m);
  std::vector<bool> ok(m);
  std::vector<IntMatrix> rel(m);
  for (std::size_t i = 0; i < m; ++i) {
    rel[i] = spec.interface_relations(i);
    rep.interface_defect[i] = d - rel[i].rank();
    ok[i] = rep.interface_defect[i] == 0;
  }
  rep.local_killing.resize(spec.block_count);
  for (std::size_t b = 0; b < spec.block_count; ++b) {
    bool left = b == 0 || ok[b - 1];
    bool right = b + 1 == spec.block_count || ok[b];
    rep.local_killing[b] = left && right;
  }
  if (m == 0) {
    rep.group = FiniteAbelianGroup({}, 0);
    return rep;
  }
  // the presentation is block diagonal: combine per-interface quotients
  std::vector<BigInt> factors;
  std::size_t free_rank = 0;
  for (std::size_t i = 0; i < m; ++i) {
    FiniteAbelianGroup gi = quotient_group(rel[i], d);
    free_rank += gi.free_rank();
    for (const auto &f : gi.invariant_factors()) factors.push_back(f);
  }
  rep.group = combine_torsion(factors, free_rank);
  return rep;
}

} // namespace torgap
