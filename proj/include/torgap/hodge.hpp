#pragma once

#include "torgap/slice_model.hpp"
#include "torgap/torsion.hpp"

#include <algorithm>
#include <optional>
#include <random>

namespace torgap {

// |v|_{G_n} for a raw class v on slice n.
template <class S>
double slice_norm(const SliceModel<S> &model, const Vec &v, int n) {
  model.check_slice(n);
  if (v.size() != static_cast<Eigen::Index>(model.dim()))
    throw DimensionError("slice_norm: vector has the wrong size");
  return static_cast<double>(model.whiten_slice(n, v.cast<S>()).norm());
}

// Exact variant for integer classes: A^{-n} v is formed over the integers.
template <class S>
double slice_norm(const SliceModel<S> &model, const IntMatrix &v, int n) {
  model.check_slice(n);
  if (v.rows() != model.dim() || v.cols() != 1)
    throw DimensionError("slice_norm: vector has the wrong size");
  IntMatrix u = model.action().power(-n) * v;
  return static_cast<double>(
      (model.slice_factor() * u.to_eigen<S>()).norm());
}

struct PushedPrimitive {
  int start = 0;                   // slice n of the class
  std::vector<double> edge_norms;  // edges at n+1/2, ..., N+1/2
  double alpha_norm = 0;           // |alpha|_{G_n}
  double c = 0;                    // 1 / smallest expanding modulus
  double constant = 0;             // max_m norm_m / (c^{m-n} |alpha|)
  double cap_residual = 0;         // distance of the class from the cap
  Vec beta;                        // whitened domain coordinates
};

namespace detail {

template <class S>
PushedPrimitive push_from_edges(const SliceModel<S> &model, int n,
                                const std::vector<VecX<S>> &whitened_edges,
                                double alpha_norm, double cap_residual) {
  const auto &op = model.op();
  PushedPrimitive p;
  p.start = n;
  p.alpha_norm = alpha_norm;
  p.cap_residual = cap_residual;
  p.c = decay_rate_constant(classify_spectrum(model.action()));
  p.beta = Vec::Zero(op.cols());
  const int big_n = model.half_length();
  for (int m = n; m <= big_n; ++m) {
    const VecX<S> &w = whitened_edges[static_cast<std::size_t>(m - n)];
    double nm = static_cast<double>(w.norm());
    p.edge_norms.push_back(nm);
    auto e = static_cast<std::size_t>(m + big_n + 1);
    Eigen::Index off = op.domain_offsets[e];
    if (m == big_n) {
      p.beta.segment(off, model.right_cap_whitened().cols()) =
          (model.right_cap_whitened().transpose() * w).template cast<double>();
    } else {
      p.beta.segment(off, w.size()) = w.template cast<double>();
    }
    double ratio = nm / (std::pow(p.c, m - n) * alpha_norm);
    p.constant = std::max(p.constant, ratio);
  }
  return p;
}

} // namespace detail

// Primitive of the class alpha on slice n obtained by pushing it to the
// right until the cap absorbs it: beta is alpha on every edge between n
// and the cap. `frame_class` is u with alpha = A^n u.
template <class S>
PushedPrimitive pushed_primitive(const SliceModel<S> &model,
                                 const Vec &frame_class, int n) {
  model.check_slice(n);
  const int big_n = model.half_length();
  const auto &act = model.action();
  // the class must lie in A^{N-n} plus, expressed in its own frame
  Mat cap = (act.power(big_n - n) * model.pair().plus_basis()).to_eigen();
  double resid = relative_distance_to_span(frame_class, cap);
  if (resid > 1e-9)
    throw PreconditionError("class is not in the transported plus subspace "
                            "(relative distance " +
                            std::to_string(resid) + ")");
  MatX<S> ainv = act.inverse().template to_eigen<S>();
  std::vector<VecX<S>> edges;
  VecX<S> u = frame_class.cast<S>();  // A^{-m} alpha for m = n
  for (int m = n; m <= big_n; ++m) {
    edges.push_back(model.edge_factor() * u);
    u = ainv * u;
  }
  double an = static_cast<double>((model.slice_factor() *
                                   frame_class.cast<S>()).norm());
  return detail::push_from_edges(model, n, edges, an, resid);
}

// Same with alpha = A^N plus * coeffs on slice n; every power is exact.
template <class S>
PushedPrimitive pushed_primitive_lattice(const SliceModel<S> &model,
                                         const Vec &coeffs, int n) {
  model.check_slice(n);
  const int big_n = model.half_length();
  const auto &act = model.action();
  const auto &plus = model.pair().plus_basis();
  if (coeffs.size() != static_cast<Eigen::Index>(plus.cols()))
    throw DimensionError("one coefficient per plus basis vector expected");
  std::vector<VecX<S>> edges;
  for (int m = n; m <= big_n; ++m) {
    MatX<S> basis = (act.power(big_n - m) * plus).template to_eigen<S>();
    edges.push_back(model.edge_factor() * (basis * coeffs.cast<S>()));
  }
  MatX<S> at_n = (act.power(big_n - n) * plus).template to_eigen<S>();
  double an = static_cast<double>(
      (model.slice_factor() * (at_n * coeffs.cast<S>())).norm());
  return detail::push_from_edges(model, n, edges, an, 0.0);
}

// Whitened codomain vector of the class A^N plus * coeffs placed on slice n.
template <class S>
Vec lattice_class_at(const SliceModel<S> &model, const Vec &coeffs, int n) {
  model.check_slice(n);
  const auto &act = model.action();
  MatX<S> at_n = (act.power(model.half_length() - n) *
                  model.pair().plus_basis())
                     .template to_eigen<S>();
  Vec out = Vec::Zero(model.op().rows());
  auto s = static_cast<Eigen::Index>(n + model.half_length());
  auto d = static_cast<Eigen::Index>(model.dim());
  out.segment(s * d, d) =
      (model.slice_factor() * (at_n * coeffs.cast<S>())).template cast<double>();
  return out;
}

struct Decomposition {
  Vec plus, minus;  // raw slice-0 vectors
  double residual = 0;
  double ratio_plus = 0, ratio_minus = 0;  // |v^pm|_0 / |v|_0
  double lambda1 = 0;
  double constant = 0;  // max ratio * lambda1^{1/2}
};

// v = v+ + v- with v+ in A^N plus and v- in A^{-N} minus, at slice 0.
template <class S>
Decomposition transversality_decomposition(
    const SliceModel<S> &model, const Vec &v,
    std::optional<double> lambda1 = std::nullopt) {
  if (!model.op().surjective())
    throw NotSurjectiveError("caps are not complementary", model.op().defect);
  const auto &act = model.action();
  const auto big_n = static_cast<std::size_t>(model.half_length());
  Mat qp = iterate_subspace(act.matrix().to_eigen(),
                            model.pair().plus_basis().to_eigen(), big_n)
               .back();
  Mat qm = iterate_subspace(act.inverse().to_eigen(),
                            model.pair().minus_basis().to_eigen(), big_n)
               .back();
  Mat sys(qp.rows(), qp.cols() + qm.cols());
  sys << qp, qm;
  Vec y = sys.fullPivLu().solve(v);
  Decomposition d;
  d.plus = qp * y.head(qp.cols());
  d.minus = qm * y.tail(qm.cols());
  d.residual = (d.plus + d.minus - v).norm() / std::max(v.norm(), 1e-300);
  d.lambda1 = lambda1 ? *lambda1 : coexact_gap(model).lambda1;
  double nv = slice_norm(model, v, 0);
  d.ratio_plus = slice_norm(model, d.plus, 0) / nv;
  d.ratio_minus = slice_norm(model, d.minus, 0) / nv;
  d.constant = std::max(d.ratio_plus, d.ratio_minus) * std::sqrt(d.lambda1);
  return d;
}

struct DeltaReport {
  double lambda0 = 0;
  double constant = 1;   // C in the decay inequality
  double sup_ratio = 0;  // exact sup over the plus subspace
  double max_sampled_ratio = 0;
  double delta = 0;      // largest admissible delta
  double rate = 0;       // delta / lambda0
  std::size_t samples = 0;
  std::size_t violations = 0;
  bool degenerate = false;  // N <= 1: empty window
  bool skipped = false;     // gap below threshold
};

// For v in A^N plus: |v|_{slice N-1} <= C lambda0^{-1/2} (1-delta)^N |v|_0.
// With v = A^N plus a the two norms are |R0 A plus a| and |R0 A^N plus a|;
// the sup over a is a generalized singular value.
template <class S>
DeltaReport exp_decay_check(const SliceModel<S> &model, std::size_t samples,
                            std::uint64_t seed,
                            std::optional<double> lambda0 = std::nullopt,
                            double gap_threshold = 0.0) {
  DeltaReport r;
  r.samples = samples;
  const int big_n = model.half_length();
  r.lambda0 = lambda0 ? *lambda0 : coexact_gap(model).lambda1;
  if (big_n <= 1) {
    r.degenerate = true;
    return r;
  }
  if (!(r.lambda0 > gap_threshold)) {
    r.skipped = true;
    return r;
  }
  const auto &act = model.action();
  const auto &plus = model.pair().plus_basis();
  Mat r0 = model.slice_factor().template cast<double>();
  Mat near = r0 * (act.power(1) * plus).to_eigen();
  Mat far = r0 * (act.power(big_n) * plus).to_eigen();
  Eigen::HouseholderQR<Mat> qr(far);
  Mat rf = qr.matrixQR().topRows(far.cols()).triangularView<Eigen::Upper>();
  Mat m = rf.transpose()
              .triangularView<Eigen::Lower>()
              .solve(near.transpose())
              .transpose();
  r.sup_ratio = Eigen::JacobiSVD<Mat>(m).singularValues()(0);
  double base = r.sup_ratio * std::sqrt(r.lambda0) / r.constant;
  r.delta = 1.0 - std::pow(base, 1.0 / big_n);
  r.rate = r.delta / r.lambda0;
  double bound = r.constant / std::sqrt(r.lambda0) *
                 std::pow(1.0 - r.delta, big_n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    Vec a(plus.cols());
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = gauss(rng);
    double ratio = (near * a).norm() / (far * a).norm();
    r.max_sampled_ratio = std::max(r.max_sampled_ratio, ratio);
    if (ratio > bound * (1 + 1e-9)) ++r.violations;
  }
  return r;
}

struct SequenceVerdict {
  bool holds = false;
  double bound = 0;  // C / (1 + 1/C)^{N-1} * a_0
  double last = 0;   // a_N
};

// a_N <= C/(1+C^{-1})^{N-1} a_0 for positive a with tail sums
// sum_{n>m} a_n <= C a_m.
inline SequenceVerdict sequence_lemma_check(double c, const std::vector<double> &a,
                                            double rel_tol = 1e-12) {
  if (!(c > 0)) throw PreconditionError("sequence lemma needs C > 0");
  if (a.size() < 2) throw PreconditionError("sequence needs N >= 1");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] > 0))
      throw PreconditionError("term " + std::to_string(i) + " is not positive");
  const std::size_t big_n = a.size() - 1;
  double tail = 0;
  std::vector<double> tails(a.size(), 0.0);  // tails[m] = sum_{n>m} a_n
  for (std::size_t m = big_n; m-- > 0;) {
    tail += a[m + 1];
    tails[m] = tail;
  }
  for (std::size_t m = 0; m < big_n; ++m)
    if (tails[m] > c * a[m] * (1 + rel_tol))
      throw PreconditionError("hypothesis violated at m = " +
                              std::to_string(m));
  SequenceVerdict v;
  v.bound = c / std::pow(1 + 1 / c, static_cast<double>(big_n) - 1) * a[0];
  v.last = a[big_n];
  v.holds = v.last <= v.bound * (1 + rel_tol);
  return v;
}

struct AuditRow {
  long long n = 0;
  double lambda1 = 0;
  double delta = 0;
  BigInt order = 1;
  double log_order = 0;
  double log_bound = 0;  // log kappa + 2g log lambda1 + N log(1+delta)
  bool pass = false;
  bool degenerate = false;
  std::string note;
};

struct AuditTable {
  std::string family_id;
  double log_kappa = 0;
  long long kappa_n = -1;
  std::vector<AuditRow> rows;
  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const AuditRow &r) {
          return !r.degenerate && !r.pass;
        }));
  }
};

// #H_1 >= kappa lambda1^{2g} (1+delta)^N, kappa fitted at the first
// non-degenerate row. Torsion is taken in the frame of the middle slice,
// the lattice the slice model caps realize.
inline AuditTable torsion_gap_audit(const GluingFamily &fam,
                                    const std::vector<long long> &ns,
                                    std::size_t samples, std::uint64_t seed,
                                    const Mat &g0) {
  AuditTable t;
  t.family_id = fam.id;
  const double two_g = 2.0 * static_cast<double>(fam.action.genus());
  for (long long n : ns) {
    AuditRow row;
    row.n = n;
    FiniteAbelianGroup h = symmetric_frame_torsion(fam, n);
    if (!h.is_finite()) {
      row.degenerate = true;
      row.note = "infinite H1";
      t.rows.push_back(row);
      continue;
    }
    row.order = h.torsion_order();
    row.log_order = h.log_torsion_order();
    if (n == 0) {
      row.degenerate = true;
      row.note = "N = 0";
      t.rows.push_back(row);
      continue;
    }
    auto model = build_slice_model(fam, static_cast<int>(n), g0);
    GapReport gap = coexact_gap(model);
    row.lambda1 = gap.lambda1;
    DeltaReport dr = exp_decay_check(model, samples, seed, gap.lambda1);
    row.delta = dr.degenerate ? 0.0 : dr.delta;
    if (dr.degenerate) row.note = "empty decay window";
    double shape = two_g * std::log(row.lambda1) +
                   static_cast<double>(n) * std::log1p(row.delta);
    if (t.kappa_n < 0) {
      t.kappa_n = n;
      t.log_kappa = row.log_order - shape;
    }
    row.log_bound = t.log_kappa + shape;
    row.pass = row.log_order >= row.log_bound - 1e-9;
    t.rows.push_back(row);
  }
  return t;
}

// ---------------------------------------------------------------------------
// chain of blocks

// Interface i joins block i-1 (left port, data in the left kill) and block i
// (right port, data in the right kill, carried over by the twist):
// alpha_i = q - T p. Every port and slice carries the base metric.
class ChainModel {
 public:
  ChainModel(BlockChainSpec spec, const Mat &g0) : spec_(std::move(spec)) {
    spec_.validate_shape();
    const std::size_t dim = 2 * spec_.genus;
    check_spd(g0, dim);
    Mat r0 = upper_cholesky<double>(g0, "base metric");
    const auto d = static_cast<Eigen::Index>(dim);
    const std::size_t m = spec_.interfaces.size();
    std::vector<Mat> left(m), right(m);
    Eigen::Index cols = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto &f = spec_.interfaces[i];
      left[i] = orthonormalize(r0 * f.left_kill.to_eigen());
      Mat t = f.twist.to_eigen();
      Mat tw = r0 * t *
               r0.triangularView<Eigen::Upper>().solve(Mat::Identity(d, d));
      right[i] = -tw * orthonormalize(r0 * f.right_kill.to_eigen());
      op_.domain_offsets.push_back(cols);
      cols += left[i].cols();
      op_.domain_offsets.push_back(cols);
      cols += right[i].cols();
      op_.defect += dim - spec_.interface_relations(i).rank();
    }
    op_.domain_offsets.push_back(cols);
    for (std::size_t i = 0; i <= m; ++i)
      op_.codomain_offsets.push_back(static_cast<Eigen::Index>(i) * d);
    BlockAssembler<double> asmb(static_cast<Eigen::Index>(m) * d, cols);
    for (std::size_t i = 0; i < m; ++i) {
      auto r = static_cast<Eigen::Index>(i) * d;
      asmb.add(r, op_.domain_offsets[2 * i], left[i]);
      asmb.add(r, op_.domain_offsets[2 * i + 1], right[i]);
    }
    op_.matrix = asmb.build();
  }

  [[nodiscard]] const BlockChainSpec &spec() const { return spec_; }
  [[nodiscard]] const CochainOperator<double> &op() const { return op_; }

 private:
  BlockChainSpec spec_;
  CochainOperator<double> op_;
};

inline ChainModel build_chain_model(const BlockChainSpec &spec, const Mat &g0) {
  return ChainModel(spec, g0);
}

inline GapReport coexact_gap(const ChainModel &model) {
  return gap_of_operator(model.op());
}

struct BassNote {
  std::string family_id;
  long long n = 0;
  double lambda1 = 0;
};

inline std::vector<BassNote> bass_note_scan(
    const std::vector<GluingFamily> &families, const std::vector<long long> &ns,
    const Mat &g0) {
  std::vector<BassNote> out;
  for (const auto &f : families)
    for (long long n : ns) {
      auto model = build_slice_model(f, static_cast<int>(n), g0);
      if (!model.op().surjective()) continue;
      out.push_back({f.id, n, coexact_gap(model).lambda1});
    }
  std::stable_sort(out.begin(), out.end(), [](const BassNote &a, const BassNote &b) {
    if (a.lambda1 != b.lambda1) return a.lambda1 < b.lambda1;
    if (a.family_id != b.family_id) return a.family_id < b.family_id;
    return a.n < b.n;
  });
  return out;
}

} // namespace torgap
