#pragma once

#include "torgap/int_matrix.hpp"
#include "torgap/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace torgap {

// [[0, I], [-I, 0]] on Z^{2g}.
inline IntMatrix standard_symplectic_form(std::size_t g) {
  IntMatrix j(2 * g, 2 * g);
  for (std::size_t i = 0; i < g; ++i) {
    j(i, g + i) = 1;
    j(g + i, i) = -1;
  }
  return j;
}

class SymplecticAction {
 public:
  explicit SymplecticAction(IntMatrix matrix)
      : SymplecticAction(matrix, standard_symplectic_form(matrix.rows() / 2)) {}

  SymplecticAction(IntMatrix matrix, IntMatrix form)
      : matrix_(std::move(matrix)), form_(std::move(form)) {
    if (!matrix_.square() || matrix_.rows() == 0 || matrix_.rows() % 2 != 0)
      throw DimensionError("symplectic action needs a non-empty even square "
                           "matrix");
    if (form_.rows() != matrix_.rows() || !form_.square())
      throw DimensionError("symplectic form has the wrong size");
    if (!(form_.transpose() == BigInt(-1) * form_) ||
        form_.determinant() == 0)
      throw PreconditionError("form is not a nondegenerate alternating form");
    if (!(matrix_.transpose() * form_ * matrix_ == form_))
      throw PreconditionError("matrix does not preserve the symplectic form");
    BigInt d = matrix_.determinant();
    if (d != 1 && d != -1) throw PreconditionError("matrix is not unimodular");
    genus_ = matrix_.rows() / 2;
    inverse_ = unimodular_inverse(matrix_);
  }

  [[nodiscard]] const IntMatrix &matrix() const { return matrix_; }
  [[nodiscard]] const IntMatrix &inverse() const { return inverse_; }
  [[nodiscard]] const IntMatrix &form() const { return form_; }
  [[nodiscard]] std::size_t genus() const { return genus_; }
  [[nodiscard]] std::size_t dim() const { return 2 * genus_; }

  [[nodiscard]] IntMatrix power(long long k) const {
    if (k >= 0) return int_matrix_power(matrix_, k);
    return int_matrix_power(inverse_, -k);
  }

 private:
  IntMatrix matrix_, form_, inverse_;
  std::size_t genus_ = 0;
};

class LagrangianPair {
 public:
  LagrangianPair(const SymplecticAction &act, IntMatrix plus, IntMatrix minus)
      : plus_(std::move(plus)), minus_(std::move(minus)) {
    check(act, plus_, "plus");
    check(act, minus_, "minus");
  }

  [[nodiscard]] const IntMatrix &plus_basis() const { return plus_; }
  [[nodiscard]] const IntMatrix &minus_basis() const { return minus_; }

  // True when the two lattices span a rank-2g sublattice.
  [[nodiscard]] bool complementary() const {
    return lattice_sum(plus_, minus_).rank() == plus_.rows();
  }

 private:
  static void check(const SymplecticAction &act, const IntMatrix &b,
                    const char *side) {
    std::string s(side);
    if (b.rows() != act.dim() || b.cols() != act.genus())
      throw DimensionError(s + " basis must be " + std::to_string(act.dim()) +
                           "x" + std::to_string(act.genus()));
    if (b.rank() != act.genus())
      throw PreconditionError(s + " basis is not of full rank");
    if (!(b.transpose() * act.form() * b).is_zero())
      throw PreconditionError(s + " subspace is not isotropic");
  }

  IntMatrix plus_, minus_;
};

struct EigenCluster {
  std::complex<double> value;  // representative; Im > 0 for complex pairs
  std::size_t multiplicity = 0;  // algebraic, per eigenvalue
  Mat basis;                     // real invariant subspace, orthonormal
  bool real = true;
  bool diagonalizable = true;
};

struct EigenSplit {
  Mat expanding_basis;
  Mat contracting_basis;
  std::vector<std::complex<double>> eigenvalues;  // with multiplicity
  std::vector<EigenCluster> clusters;
  bool hyperbolic = false;
  double reconstruction_residual = 0;
  std::string diagnostic;
};

namespace detail {

inline bool eig_order(const std::complex<double> &a,
                      const std::complex<double> &b) {
  if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

inline Mat null_space(const Mat &m, std::size_t dim) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(static_cast<Eigen::Index>(dim));
}

} // namespace detail

inline EigenSplit classify_spectrum(const SymplecticAction &act) {
  const Mat a = act.matrix().to_eigen();
  const auto n = a.rows();
  const double anorm = a.norm();
  Eigen::EigenSolver<Mat> es(a, false);
  std::vector<std::complex<double>> raw(es.eigenvalues().data(),
                                        es.eigenvalues().data() + n);
  std::sort(raw.begin(), raw.end(), detail::eig_order);

  // group nearly equal eigenvalues
  std::vector<std::vector<std::complex<double>>> groups;
  for (const auto &z : raw) {
    bool placed = false;
    for (auto &grp : groups)
      if (std::abs(grp.front() - z) <= 1e-6 * std::max(1.0, std::abs(z))) {
        grp.push_back(z);
        placed = true;
        break;
      }
    if (!placed) groups.push_back({z});
  }

  EigenSplit out;
  std::vector<std::string> notes;
  std::vector<Mat> exp_parts, con_parts;
  bool all_ok = true;
  for (const auto &grp : groups) {
    std::complex<double> mean = 0;
    for (const auto &z : grp) mean += z;
    mean /= static_cast<double>(grp.size());
    const double scale = std::max(1.0, std::abs(mean));
    if (mean.imag() < -1e-6 * scale) continue;  // partner of a listed pair
    EigenCluster c;
    c.multiplicity = grp.size();
    c.real = std::abs(mean.imag()) <= 1e-6 * scale;
    Mat shifted, basis;
    std::size_t want;
    if (c.real) {
      shifted = a - mean.real() * Mat::Identity(n, n);
      want = grp.size();
    } else {
      Mat s1 = a - mean.real() * Mat::Identity(n, n);
      shifted = s1 * s1 + mean.imag() * mean.imag() * Mat::Identity(n, n);
      want = 2 * grp.size();
    }
    Eigen::JacobiSVD<Mat> svd(shifted, Eigen::ComputeFullV);
    const auto &sv = svd.singularValues();
    double worst = sv(n - static_cast<Eigen::Index>(want));
    double shift_scale = c.real ? anorm : anorm * anorm;
    c.diagonalizable = worst <= 1e-8 * shift_scale;
    basis = svd.matrixV().rightCols(static_cast<Eigen::Index>(want));
    basis = orthonormalize(basis);
    Mat restricted = basis.transpose() * a * basis;
    double resid;
    if (c.real) {
      double lam = restricted.trace() / static_cast<double>(want);
      c.value = lam;
      resid = (a * basis - lam * basis).norm() / anorm;
    } else {
      Eigen::EigenSolver<Mat> rs(restricted, false);
      std::complex<double> best = rs.eigenvalues()(0);
      for (Eigen::Index i = 0; i < rs.eigenvalues().size(); ++i)
        if (rs.eigenvalues()(i).imag() > best.imag()) best = rs.eigenvalues()(i);
      c.value = best;
      resid = (a * basis - basis * restricted).norm() / anorm;
    }
    out.reconstruction_residual = std::max(out.reconstruction_residual, resid);
    c.basis = basis;
    if (!c.diagonalizable) {
      all_ok = false;
      notes.push_back("eigenvalue " + std::to_string(c.value.real()) +
                      " is not diagonalizable within tolerance");
    }
    double mod = std::abs(c.value);
    if (std::abs(mod - 1.0) <= 1e-9) {
      all_ok = false;
      notes.push_back("eigenvalue of modulus 1 at " +
                      std::to_string(c.value.real()));
    } else if (mod > 1.0) {
      exp_parts.push_back(basis);
    } else {
      con_parts.push_back(basis);
    }
    for (std::size_t i = 0; i < c.multiplicity; ++i) {
      out.eigenvalues.push_back(c.value);
      if (!c.real) out.eigenvalues.push_back(std::conj(c.value));
    }
    out.clusters.push_back(std::move(c));
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), detail::eig_order);

  auto stack = [n](const std::vector<Mat> &parts) {
    Eigen::Index cols = 0;
    for (const auto &p : parts) cols += p.cols();
    Mat m(n, cols);
    Eigen::Index at = 0;
    for (const auto &p : parts) {
      m.middleCols(at, p.cols()) = p;
      at += p.cols();
    }
    return m;
  };
  out.expanding_basis = stack(exp_parts);
  out.contracting_basis = stack(con_parts);
  out.hyperbolic = all_ok &&
                   out.expanding_basis.cols() + out.contracting_basis.cols() == n;
  for (const auto &s : notes)
    out.diagnostic += (out.diagnostic.empty() ? "" : "; ") + s;
  return out;
}

// Angle between v and the invariant subspace of the cluster closest to lambda.
inline double angle_to_eigenspace(const EigenSplit &split, const Vec &v,
                                  std::complex<double> lambda) {
  const EigenCluster *best = nullptr;
  for (const auto &c : split.clusters)
    if (!best || std::abs(c.value - lambda) < std::abs(best->value - lambda))
      best = &c;
  if (!best) throw PreconditionError("empty spectrum");
  return smallest_principal_angle(best->basis, v);
}

inline double decay_rate_constant(const EigenSplit &split) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto &c : split.clusters)
    if (std::abs(c.value) > 1.0 + 1e-9) m = std::min(m, std::abs(c.value));
  if (!std::isfinite(m)) throw PreconditionError("no expanding eigenvalue");
  return 1.0 / m;
}

struct ConditionReport {
  double plus_vs_contracting = 0;
  double minus_vs_expanding = 0;
  double plus_vs_expanding = 0;
  double minus_vs_contracting = 0;
  double plus_vs_minus = 0;
  bool plus_condition = false;   // plus meets the contracting space trivially
  bool minus_condition = false;  // minus meets the expanding space trivially
  bool complementary = false;    // plus + minus spans the whole space
};

inline constexpr double kZeroAngle = 1e-8;

inline ConditionReport check_conditions(const SymplecticAction &act,
                                        const LagrangianPair &pair) {
  EigenSplit split = classify_spectrum(act);
  if (!split.hyperbolic)
    throw PreconditionError("action is not hyperbolic: " + split.diagnostic);
  Mat p = pair.plus_basis().to_eigen(), m = pair.minus_basis().to_eigen();
  ConditionReport r;
  r.plus_vs_contracting = smallest_principal_angle(p, split.contracting_basis);
  r.minus_vs_expanding = smallest_principal_angle(m, split.expanding_basis);
  r.plus_vs_expanding = smallest_principal_angle(p, split.expanding_basis);
  r.minus_vs_contracting = smallest_principal_angle(m, split.contracting_basis);
  r.plus_vs_minus = smallest_principal_angle(p, m);
  r.plus_condition = r.plus_vs_contracting > kZeroAngle;
  r.minus_condition = r.minus_vs_expanding > kZeroAngle;
  r.complementary = pair.complementary();
  return r;
}

struct AngleTable {
  std::size_t k_max = 0;
  std::size_t k0 = 0;
  std::vector<std::vector<double>> angles;  // angles[k_plus][k_minus]
  double infimum = 0;
  double limit_angle = 0;  // expanding vs contracting
  bool plus_condition = false, minus_condition = false;

  [[nodiscard]] double at(std::size_t kp, std::size_t km) const {
    return angles.at(kp).at(km);
  }
};

// Orthonormal bases of step^k span(start) for k = 0..k_max.
inline std::vector<Mat> iterate_subspace(const Mat &step, const Mat &start,
                                         std::size_t k_max) {
  std::vector<Mat> out;
  out.reserve(k_max + 1);
  out.push_back(orthonormalize(start));
  for (std::size_t k = 1; k <= k_max; ++k)
    out.push_back(orthonormalize(step * out.back()));
  return out;
}

inline AngleTable uniform_transversality_scan(const SymplecticAction &act,
                                              const LagrangianPair &pair,
                                              std::size_t k_max) {
  if (pair.plus_basis().cols() + pair.minus_basis().cols() != act.dim())
    throw DimensionError("Lagrangian dimensions do not sum to 2g");
  EigenSplit split = classify_spectrum(act);
  AngleTable t;
  t.k_max = k_max;
  if (split.hyperbolic) {
    t.limit_angle = smallest_principal_angle(split.expanding_basis,
                                             split.contracting_basis);
    Mat p = pair.plus_basis().to_eigen(), m = pair.minus_basis().to_eigen();
    t.plus_condition =
        smallest_principal_angle(p, split.contracting_basis) > kZeroAngle;
    t.minus_condition =
        smallest_principal_angle(m, split.expanding_basis) > kZeroAngle;
  }
  auto plus = iterate_subspace(act.matrix().to_eigen(),
                               pair.plus_basis().to_eigen(), k_max);
  auto minus = iterate_subspace(act.inverse().to_eigen(),
                                pair.minus_basis().to_eigen(), k_max);
  t.angles.assign(k_max + 1, std::vector<double>(k_max + 1));
  for (std::size_t i = 0; i <= k_max; ++i)
    for (std::size_t j = 0; j <= k_max; ++j)
      t.angles[i][j] = smallest_principal_angle(plus[i], minus[j]);

  // smallest K with every angle beyond the anti-diagonal K nonzero
  std::size_t last_bad_sum = 0;
  bool any_bad = false;
  for (std::size_t i = 0; i <= k_max; ++i)
    for (std::size_t j = 0; j <= k_max; ++j)
      if (t.angles[i][j] <= kZeroAngle) {
        any_bad = true;
        last_bad_sum = std::max(last_bad_sum, i + j);
      }
  t.k0 = any_bad ? last_bad_sum + 1 : 0;
  t.infimum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= k_max; ++i)
    for (std::size_t j = 0; j <= k_max; ++j)
      if (i + j >= t.k0) t.infimum = std::min(t.infimum, t.angles[i][j]);
  if (!std::isfinite(t.infimum)) t.infimum = 0;
  return t;
}

struct DecayReport {
  double c = 0;
  double empirical_constant = 0;  // sup over samples
  double subspace_constant = 0;   // sup over the whole subspace
  std::size_t violations = 0;
  std::size_t samples = 0;
  std::size_t k_max = 0;
};

// Sup of |A^j w| / (c^{k-j} |A^k w|) over sampled w in span(plus), j<=k<=k_max.
// Powers are tracked as a QR chain A Q_k = Q_{k+1} R_{k+1}, so that
// A^k W = Q_k R_k ... R_1 R_0 and all ratios reduce to small triangular
// products without forming A^k.
inline DecayReport decay_constant_check(const SymplecticAction &act,
                                        const Mat &plus, std::size_t k_max,
                                        std::size_t samples,
                                        std::uint64_t seed) {
  EigenSplit split = classify_spectrum(act);
  if (!split.hyperbolic)
    throw PreconditionError("action is not hyperbolic: " + split.diagnostic);
  if (plus.rows() != static_cast<Eigen::Index>(act.dim()) || plus.cols() == 0)
    throw DimensionError("plus subspace has the wrong shape");
  if (smallest_principal_angle(plus, split.contracting_basis) <= kZeroAngle)
    throw PreconditionError(
        "plus subspace meets the contracting subspace nontrivially");
  DecayReport rep;
  rep.c = decay_rate_constant(split);
  rep.samples = samples;
  rep.k_max = k_max;
  const Mat a = act.matrix().to_eigen();
  const auto q = plus.cols();

  // R factors: W = Q_0 R_0, A Q_k = Q_{k+1} R_{k+1}
  std::vector<Mat> r(k_max + 1);
  Eigen::HouseholderQR<Mat> qr0(plus);
  Mat qk = qr0.householderQ() * Mat::Identity(plus.rows(), q);
  r[0] = qr0.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  for (std::size_t k = 1; k <= k_max; ++k) {
    Eigen::HouseholderQR<Mat> qr(a * qk);
    qk = qr.householderQ() * Mat::Identity(plus.rows(), q);
    r[k] = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  }

  for (std::size_t j = 0; j <= k_max; ++j) {
    Mat prod = Mat::Identity(q, q);  // R_k ... R_{j+1}
    for (std::size_t k = j; k <= k_max; ++k) {
      if (k > j) prod = r[k] * prod;
      Eigen::JacobiSVD<Mat> svd(prod);
      double smin = svd.singularValues()(q - 1);
      double v = std::pow(rep.c, -static_cast<double>(k - j)) / smin;
      rep.subspace_constant = std::max(rep.subspace_constant, v);
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> norms(k_max + 1);
  for (std::size_t s = 0; s < samples; ++s) {
    Vec coeff(q);
    for (Eigen::Index i = 0; i < q; ++i) coeff(i) = gauss(rng);
    // track the coordinate vector of A^k w in the Q_k basis, normalized
    // each step; log norms accumulate the scale
    Vec x = r[0] * coeff;
    std::vector<double> lognorm(k_max + 1);
    double acc = std::log(x.norm());
    x /= x.norm();
    lognorm[0] = acc;
    for (std::size_t k = 1; k <= k_max; ++k) {
      x = r[k] * x;
      double nx = x.norm();
      acc += std::log(nx);
      x /= nx;
      lognorm[k] = acc;
    }
    double worst = 0;
    for (std::size_t j = 0; j <= k_max; ++j)
      for (std::size_t k = j; k <= k_max; ++k) {
        double lr = lognorm[j] - lognorm[k] -
                    static_cast<double>(k - j) * std::log(rep.c);
        worst = std::max(worst, std::exp(lr));
      }
    rep.empirical_constant = std::max(rep.empirical_constant, worst);
    if (worst > rep.subspace_constant * (1 + 1e-9)) ++rep.violations;
  }
  return rep;
}

inline DecayReport decay_constant_check(const SymplecticAction &act,
                                        const IntMatrix &plus,
                                        std::size_t k_max, std::size_t samples,
                                        std::uint64_t seed) {
  return decay_constant_check(act, plus.to_eigen(), k_max, samples, seed);
}

} // namespace torgap
