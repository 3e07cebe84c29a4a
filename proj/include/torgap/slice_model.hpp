#pragma once

#include "torgap/families.hpp"
#include "torgap/subspace.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <string>
#include <vector>

namespace torgap {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Block-structured filling operator in orthonormal (whitened) coordinates:
// a map from edge data to slice data whose singular values are the square
// roots of the coexact spectrum.
template <class S = double>
struct CochainOperator {
  Eigen::SparseMatrix<S> matrix;  // codomain x domain
  std::vector<Eigen::Index> domain_offsets;    // block starts plus end
  std::vector<Eigen::Index> codomain_offsets;  // block starts plus end
  std::size_t defect = 0;  // dimension of the cokernel, from exact ranks

  [[nodiscard]] Eigen::Index rows() const { return matrix.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return matrix.cols(); }
  [[nodiscard]] bool surjective() const { return defect == 0; }
};

// Collects dense blocks and turns them into a sparse matrix.
template <class S>
class BlockAssembler {
 public:
  BlockAssembler(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {}
  void add(Eigen::Index r0, Eigen::Index c0, const MatX<S> &b) {
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j)
        if (b(i, j) != S(0)) trips_.emplace_back(r0 + i, c0 + j, b(i, j));
  }
  Eigen::SparseMatrix<S> build() const {
    Eigen::SparseMatrix<S> m(rows_, cols_);
    m.setFromTriplets(trips_.begin(), trips_.end());
    m.makeCompressed();
    return m;
  }

 private:
  Eigen::Index rows_, cols_;
  std::vector<Eigen::Triplet<S>> trips_;
};

template <class S>
MatX<S> orthonormalize_t(const MatX<S> &m) {
  Eigen::HouseholderQR<MatX<S>> qr(m);
  return qr.householderQ() * MatX<S>::Identity(m.rows(), m.cols());
}

// Upper factor R with g = R^T R.
template <class S>
MatX<S> upper_cholesky(const MatX<S> &g, const char *what) {
  Eigen::LLT<MatX<S>> llt(g);
  if (llt.info() != Eigen::Success)
    throw PreconditionError(std::string(what) + " is not positive definite");
  MatX<S> l = llt.matrixL();
  return l.transpose();
}

inline void check_spd(const Mat &g, std::size_t dim) {
  if (g.rows() != static_cast<Eigen::Index>(dim) || g.cols() != g.rows())
    throw DimensionError("base metric has the wrong size");
  if ((g - g.transpose()).norm() > 1e-12 * std::max(1.0, g.norm()))
    throw PreconditionError("base metric is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  if (es.eigenvalues()(0) <= 0)
    throw PreconditionError("base metric is not positive definite");
}

// V-valued difference complex on slices -N..N with transported caps.
// Slice n carries G_n = A^{-nT} G0 A^{-n}; the edge between slices n and
// n+1 carries the average H_n = A^{-nT} H A^{-n}, H = (G0 + A^{-T} G0 A^{-1})/2.
// In coordinates a~ = R0 A^{-n} a on slices and b~ = L^T A^{-n} b on edges
// (G0 = R0^T R0, H = L L^T), every block is independent of n.
template <class S = double>
class SliceModel {
 public:
  SliceModel(const SymplecticAction &act, const LagrangianPair &pair, int n,
             const Mat &g0)
      : act_(act), pair_(pair), n_(n) {
    if (n < 0) throw PreconditionError("slice model needs N >= 0");
    const std::size_t dim = act.dim();
    check_spd(g0, dim);
    g0_ = g0;
    MatX<S> g0s = g0.cast<S>();
    a_ = act.matrix().to_eigen<S>();
    ainv_ = act.inverse().to_eigen<S>();
    r0_ = upper_cholesky<S>(g0s, "base metric");
    MatX<S> h = (g0s + ainv_.transpose() * g0s * ainv_) / S(2);
    lt_ = upper_cholesky<S>(h, "edge metric");
    MatX<S> lt_inv = lt_.template triangularView<Eigen::Upper>().solve(
        MatX<S>::Identity(dim, dim));
    diag_block_ = r0_ * lt_inv;
    sub_block_ = -(r0_ * ainv_ * lt_inv);
    right_cap_ = orthonormalize_t<S>(lt_ * pair.plus_basis().to_eigen<S>());
    left_cap_ =
        orthonormalize_t<S>(lt_ * a_ * pair.minus_basis().to_eigen<S>());

    right_cap_raw_ = act.power(n) * pair.plus_basis();
    left_cap_raw_ = act.power(-n) * pair.minus_basis();
    op_.defect = dim - lattice_sum(right_cap_raw_, left_cap_raw_).rank();
    assemble();
  }

  [[nodiscard]] int half_length() const { return n_; }
  [[nodiscard]] std::size_t genus() const { return act_.genus(); }
  [[nodiscard]] std::size_t dim() const { return act_.dim(); }
  [[nodiscard]] std::size_t slice_count() const { return 2 * n_ + 1; }
  [[nodiscard]] std::size_t edge_count() const { return 2 * n_ + 2; }
  [[nodiscard]] const SymplecticAction &action() const { return act_; }
  [[nodiscard]] const LagrangianPair &pair() const { return pair_; }
  [[nodiscard]] const CochainOperator<S> &op() const { return op_; }
  [[nodiscard]] const Mat &base_metric() const { return g0_; }
  [[nodiscard]] const MatX<S> &slice_factor() const { return r0_; }
  [[nodiscard]] const MatX<S> &edge_factor() const { return lt_; }
  [[nodiscard]] const MatX<S> &diagonal_block() const { return diag_block_; }
  [[nodiscard]] const MatX<S> &subdiagonal_block() const { return sub_block_; }
  [[nodiscard]] const IntMatrix &right_cap_raw() const { return right_cap_raw_; }
  [[nodiscard]] const IntMatrix &left_cap_raw() const { return left_cap_raw_; }
  [[nodiscard]] const MatX<S> &right_cap_whitened() const { return right_cap_; }
  [[nodiscard]] const MatX<S> &left_cap_whitened() const { return left_cap_; }

  void check_slice(int n) const {
    if (n < -n_ || n > n_)
      throw std::out_of_range("slice index " + std::to_string(n) +
                              " outside [-" + std::to_string(n_) + ", " +
                              std::to_string(n_) + "]");
  }

  // Raw metric on slice n, G_n = A^{-nT} G0 A^{-n}.
  [[nodiscard]] MatX<S> slice_metric(int n) const {
    check_slice(n);
    MatX<S> p = act_.power(-n).template to_eigen<S>();
    return p.transpose() * g0_.cast<S>() * p;
  }

  // Raw metric on the edge at position m + 1/2, m in [-N-1, N].
  [[nodiscard]] MatX<S> edge_metric(int m) const {
    if (m < -n_ - 1 || m > n_) throw std::out_of_range("edge index");
    MatX<S> p = act_.power(-m).template to_eigen<S>();
    return p.transpose() * (lt_.transpose() * lt_) * p;
  }

  // Whitened coordinates of a raw class on slice n.
  [[nodiscard]] VecX<S> whiten_slice(int n, const VecX<S> &raw) const {
    check_slice(n);
    return r0_ * (act_.power(-n).template to_eigen<S>() * raw);
  }

  // Raw class on slice n from whitened coordinates.
  [[nodiscard]] VecX<S> raw_slice(int n, const VecX<S> &w) const {
    check_slice(n);
    VecX<S> u = r0_.template triangularView<Eigen::Upper>().solve(w);
    return act_.power(n).template to_eigen<S>() * u;
  }

  // Raw edge vectors (index 0 is position -N-1/2) from a whitened domain vector.
  [[nodiscard]] std::vector<VecX<S>> raw_edges(const VecX<S> &beta) const {
    std::vector<VecX<S>> out;
    const auto &off = op_.domain_offsets;
    for (std::size_t e = 0; e < edge_count(); ++e) {
      VecX<S> w;
      auto seg = beta.segment(off[e], off[e + 1] - off[e]);
      if (e == 0)
        w = left_cap_ * seg;
      else if (e + 1 == edge_count())
        w = right_cap_ * seg;
      else
        w = seg;
      int m = static_cast<int>(e) - n_ - 1;
      VecX<S> u = lt_.template triangularView<Eigen::Upper>().solve(w);
      out.push_back(act_.power(m).template to_eigen<S>() * u);
    }
    return out;
  }

 private:
  void assemble() {
    const Eigen::Index d = static_cast<Eigen::Index>(dim());
    const Eigen::Index gl = left_cap_.cols(), gr = right_cap_.cols();
    const Eigen::Index slices = static_cast<Eigen::Index>(slice_count());
    const Eigen::Index edges = static_cast<Eigen::Index>(edge_count());
    op_.domain_offsets.clear();
    op_.codomain_offsets.clear();
    Eigen::Index at = 0;
    for (Eigen::Index e = 0; e < edges; ++e) {
      op_.domain_offsets.push_back(at);
      at += (e == 0) ? gl : (e + 1 == edges ? gr : d);
    }
    op_.domain_offsets.push_back(at);
    for (Eigen::Index s = 0; s <= slices; ++s) op_.codomain_offsets.push_back(s * d);

    BlockAssembler<S> asmb(slices * d, at);
    for (Eigen::Index s = 0; s < slices; ++s) {
      // right edge s+1 with the diagonal block, left edge s with the other
      Eigen::Index right = s + 1, left = s;
      MatX<S> rb = right + 1 == edges ? MatX<S>(diag_block_ * right_cap_)
                                      : diag_block_;
      MatX<S> lb = left == 0 ? MatX<S>(sub_block_ * left_cap_) : sub_block_;
      asmb.add(s * d, op_.domain_offsets[right], rb);
      asmb.add(s * d, op_.domain_offsets[left], lb);
    }
    op_.matrix = asmb.build();
  }

  SymplecticAction act_;
  LagrangianPair pair_;
  int n_;
  Mat g0_;
  MatX<S> a_, ainv_, r0_, lt_, diag_block_, sub_block_, right_cap_, left_cap_;
  IntMatrix right_cap_raw_, left_cap_raw_;
  CochainOperator<S> op_;
};

template <class S = double>
SliceModel<S> build_slice_model(const SymplecticAction &act,
                                const LagrangianPair &pair, int n,
                                const Mat &g0) {
  return SliceModel<S>(act, pair, n, g0);
}

template <class S = double>
SliceModel<S> build_slice_model(const GluingFamily &fam, int n,
                                const Mat &g0) {
  if (fam.twist_exponent_per_step != 2)
    throw PreconditionError("slice model uses a symmetric twist of A^{2N}");
  return SliceModel<S>(fam.action, fam.pair, n, g0);
}

inline Mat identity_metric(std::size_t dim) { return Mat::Identity(dim, dim); }

// ---------------------------------------------------------------------------
// spectral solves

struct GapReport {
  double lambda1 = 0;
  double cofill_constant = 0;
  std::string cofill_method;
  Vec witness;    // unit class in whitened codomain coordinates
  Vec primitive;  // its filling, whitened domain coordinates
  double residual = 0;
  std::size_t iterations = 0;
  std::size_t dimension = 0;
};

template <class S>
struct SmallestPair {
  S value = 0;  // smallest eigenvalue of D^T D
  VecX<S> vector;
  S residual = 0;
  std::size_t iterations = 0;
};

// Start block: all ones, then cosine modes, orthonormalized.
template <class S>
MatX<S> start_block(Eigen::Index n, Eigen::Index b) {
  MatX<S> x(n, b);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = S(1);
    for (Eigen::Index j = 1; j < b; ++j)
      x(i, j) = std::cos(S(M_PI) * S(j) * (S(i) + S(0.5)) / S(n));
  }
  return orthonormalize_t<S>(x);
}

// Smallest eigenpair of D^T D for square invertible sparse D by block inverse
// iteration with Rayleigh-Ritz; the operator is applied through sparse LU
// factors of D and D^T, never through D^T D itself.
template <class S>
SmallestPair<S> smallest_normal_eigenpair(const Eigen::SparseMatrix<S> &d,
                                          double tol = 1e-10,
                                          std::size_t max_iter = 20000,
                                          Eigen::Index block = 6) {
  if (d.rows() != d.cols())
    throw DimensionError("inverse iteration needs a square operator");
  const Eigen::Index n = d.cols();
  Eigen::SparseLU<Eigen::SparseMatrix<S>> lu;
  lu.compute(d);
  if (lu.info() != Eigen::Success)
    throw PreconditionError("filling operator factorization failed");
  Eigen::SparseMatrix<S> dt = d.transpose();
  dt.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<S>> lut;
  lut.compute(dt);
  if (lut.info() != Eigen::Success)
    throw PreconditionError("filling operator factorization failed");
  auto apply_inverse = [&](const MatX<S> &x) -> MatX<S> {
    MatX<S> z = lut.solve(x);
    return lu.solve(z);
  };

  const Eigen::Index b = std::min<Eigen::Index>(block, n);
  MatX<S> x = start_block<S>(n, b);
  SmallestPair<S> out;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    MatX<S> y = apply_inverse(x);
    MatX<S> h = x.transpose() * y;
    h = (h + h.transpose()).eval() / S(2);
    Eigen::SelfAdjointEigenSolver<MatX<S>> es(h);
    // eigenvalues ascending; the largest belongs to the smallest of D^T D
    MatX<S> rot = es.eigenvectors().rowwise().reverse();
    S theta = es.eigenvalues()(b - 1);
    VecX<S> u = x * rot.col(0);
    VecX<S> ku = y * rot.col(0);
    S res = (ku - theta * u).norm() / theta;
    out.value = S(1) / theta;
    out.vector = u;
    out.residual = res;
    out.iterations = it;
    if (res <= S(tol)) break;
    x = orthonormalize_t<S>(MatX<S>(y * rot));
  }
  return out;
}

// Smallest singular value of a dense matrix; the oracle for small models.
template <class S>
S dense_smallest_singular_value(const MatX<S> &d) {
  Eigen::JacobiSVD<MatX<S>> svd(d);
  const auto &s = svd.singularValues();
  if (d.rows() < d.cols()) return S(0);
  return s(s.size() - 1);
}

// Norm of the least-norm solution operator of D (the optimal filling
// constant), from a complete orthogonal decomposition and an SVD.
template <class S>
S dense_cofill_constant(const Eigen::SparseMatrix<S> &d) {
  MatX<S> dd = MatX<S>(d);
  Eigen::CompleteOrthogonalDecomposition<MatX<S>> cod(dd);
  MatX<S> f = cod.solve(MatX<S>::Identity(dd.rows(), dd.rows()));
  Eigen::BDCSVD<MatX<S>> svd(f);
  return svd.singularValues()(0);
}

inline constexpr Eigen::Index kDenseCofillLimit = 1200;

template <class S>
GapReport gap_of_operator(const CochainOperator<S> &op) {
  if (!op.surjective())
    throw NotSurjectiveError("filling operator is not surjective (positive "
                             "b1 analog): cokernel dimension " +
                                 std::to_string(op.defect),
                             op.defect);
  if (op.rows() != op.cols())
    throw DimensionError("filling operator is not square");
  SmallestPair<S> sp = smallest_normal_eigenpair<S>(op.matrix);
  GapReport r;
  r.lambda1 = static_cast<double>(sp.value);
  r.residual = static_cast<double>(sp.residual);
  r.iterations = sp.iterations;
  r.dimension = static_cast<std::size_t>(op.cols());
  VecX<S> img = op.matrix * sp.vector;
  S img_norm = img.norm();
  r.witness = (img / img_norm).template cast<double>();
  r.primitive = (sp.vector / img_norm).template cast<double>();
  if (op.cols() <= kDenseCofillLimit) {
    r.cofill_constant = static_cast<double>(dense_cofill_constant<S>(op.matrix));
    r.cofill_method = "least-norm operator norm";
  } else {
    r.cofill_constant = static_cast<double>(S(1) / img_norm);
    r.cofill_method = "witness ratio";
  }
  return r;
}

template <class S>
GapReport coexact_gap(const SliceModel<S> &model) {
  return gap_of_operator(model.op());
}

struct Filling {
  Vec beta;  // whitened domain coordinates
  double alpha_norm = 0;
  double beta_norm = 0;
  double residual = 0;  // relative
};

// Least-norm solution of D b = alpha, alpha in whitened codomain coordinates.
template <class S>
Filling cofill(const CochainOperator<S> &op, const Vec &alpha) {
  if (alpha.size() != op.rows())
    throw DimensionError("class has the wrong number of coordinates");
  Filling f;
  f.alpha_norm = alpha.norm();
  if (f.alpha_norm == 0) {
    f.beta = Vec::Zero(op.cols());
    return f;
  }
  VecX<S> a = alpha.cast<S>();
  VecX<S> b;
  if (op.surjective() && op.rows() == op.cols()) {
    Eigen::SparseLU<Eigen::SparseMatrix<S>> lu;
    lu.compute(op.matrix);
    if (lu.info() != Eigen::Success)
      throw PreconditionError("filling operator factorization failed");
    b = lu.solve(a);
  } else {
    MatX<S> dd = MatX<S>(op.matrix);
    Eigen::CompleteOrthogonalDecomposition<MatX<S>> cod(dd);
    b = cod.solve(a);
  }
  VecX<S> r = op.matrix * b - a;
  f.residual = static_cast<double>(r.norm()) / f.alpha_norm;
  if (f.residual > 1e-8)
    throw InconsistentError("class is not in the range of the filling "
                            "operator (least-squares residual " +
                                std::to_string(f.residual) + ")",
                            f.residual);
  f.beta = b.template cast<double>();
  f.beta_norm = f.beta.norm();
  return f;
}

template <class S>
Filling cofill(const SliceModel<S> &model, const Vec &alpha_whitened) {
  return cofill(model.op(), alpha_whitened);
}

// Whitened codomain vector from per-slice classes given in their own frames
// (the class on slice n is A^n u_n; u_n is passed).
template <class S>
Vec whiten_frame_classes(const SliceModel<S> &model,
                         const std::vector<Vec> &frame_classes) {
  if (frame_classes.size() != model.slice_count())
    throw DimensionError("one class per slice expected");
  const Eigen::Index d = static_cast<Eigen::Index>(model.dim());
  Vec out(d * static_cast<Eigen::Index>(model.slice_count()));
  Mat r0 = model.slice_factor().template cast<double>();
  for (std::size_t s = 0; s < frame_classes.size(); ++s) {
    if (frame_classes[s].size() != d) throw DimensionError("class size");
    out.segment(static_cast<Eigen::Index>(s) * d, d) = r0 * frame_classes[s];
  }
  return out;
}

// ---------------------------------------------------------------------------
// raw-metric path, for cross-validation at small N

// Smallest eigenvalue of D^T M_cod D y = lambda M_dom y with raw metrics and
// integer cap bases. Precision is the caller's choice of S.
template <class S>
S raw_metric_gap(const SymplecticAction &act, const LagrangianPair &pair, int n,
                 const Mat &g0) {
  if (n < 0) throw PreconditionError("N must be >= 0");
  check_spd(g0, act.dim());
  const Eigen::Index d = static_cast<Eigen::Index>(act.dim());
  MatX<S> g0s = g0.cast<S>();
  auto metric_at = [&](int k) {  // G_k = A^{-kT} G0 A^{-k}
    MatX<S> p = act.power(-k).template to_eigen<S>();
    return MatX<S>(p.transpose() * g0s * p);
  };
  auto edge_at = [&](int m) {
    return MatX<S>((metric_at(m) + metric_at(m + 1)) / S(2));
  };
  MatX<S> capr = (act.power(n) * pair.plus_basis()).to_eigen<S>();
  MatX<S> capl = (act.power(-n) * pair.minus_basis()).to_eigen<S>();
  const Eigen::Index gl = capl.cols(), gr = capr.cols();
  const Eigen::Index slices = 2 * n + 1, interior = 2 * n;
  const Eigen::Index cols = gl + interior * d + gr, rows = slices * d;
  MatX<S> dm = MatX<S>::Zero(rows, cols);
  MatX<S> mdom = MatX<S>::Zero(cols, cols), mcod = MatX<S>::Zero(rows, rows);
  auto col_of_edge = [&](Eigen::Index e) -> Eigen::Index {
    if (e == 0) return 0;
    return gl + (e - 1) * d;
  };
  for (Eigen::Index s = 0; s < slices; ++s) {
    Eigen::Index right = s + 1, left = s;
    if (right == slices)
      dm.block(s * d, col_of_edge(right), d, gr) = capr;
    else
      dm.block(s * d, col_of_edge(right), d, d) = MatX<S>::Identity(d, d);
    if (left == 0)
      dm.block(s * d, 0, d, gl) = -capl;
    else
      dm.block(s * d, col_of_edge(left), d, d) = -MatX<S>::Identity(d, d);
    mcod.block(s * d, s * d, d, d) = metric_at(static_cast<int>(s) - n);
  }
  for (Eigen::Index e = 0; e <= slices; ++e) {
    int m = static_cast<int>(e) - n - 1;
    MatX<S> h = edge_at(m);
    if (e == 0)
      mdom.block(0, 0, gl, gl) = capl.transpose() * h * capl;
    else if (e == slices)
      mdom.block(col_of_edge(e), col_of_edge(e), gr, gr) =
          capr.transpose() * h * capr;
    else
      mdom.block(col_of_edge(e), col_of_edge(e), d, d) = h;
  }
  MatX<S> k = dm.transpose() * mcod * dm;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX<S>> ges(k, mdom);
  if (ges.info() != Eigen::Success)
    throw PreconditionError("raw generalized eigensolve failed");
  return ges.eigenvalues()(0);
}

} // namespace torgap
