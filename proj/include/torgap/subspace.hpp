#pragma once

#include "torgap/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace torgap {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Orthonormal basis of the column span; rank decided relative to the largest
// singular value.
inline Mat orthonormal_basis(const Mat &m, double rel_tol = 1e-12) {
  if (m.cols() == 0) return Mat(m.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const auto &s = svd.singularValues();
  Eigen::Index r = 0;
  double smax = s.size() ? s(0) : 0.0;
  while (r < s.size() && s(r) > rel_tol * smax && s(r) > 0) ++r;
  return svd.matrixU().leftCols(r);
}

// Orthonormal basis of exactly m.cols() columns (m assumed full rank).
inline Mat orthonormalize(const Mat &m) {
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

// Smallest principal angle between span(a) and span(b). Small angles come from
// the sine formulation to avoid acos cancellation.
inline double smallest_principal_angle(const Mat &a, const Mat &b) {
  if (a.cols() == 0 || b.cols() == 0) return M_PI / 2;
  Mat qa = orthonormal_basis(a), qb = orthonormal_basis(b);
  Eigen::JacobiSVD<Mat> cos_svd(qa.transpose() * qb);
  double cmax = std::min(1.0, cos_svd.singularValues()(0));
  double from_cos = std::acos(cmax);
  if (from_cos < M_PI / 4) {
    Mat resid = qb - qa * (qa.transpose() * qb);
    // the sine of the smallest angle is the smallest of the q singular
    // values of the residual, for q = dim span(b) <= dim complement
    Eigen::JacobiSVD<Mat> sin_svd(resid);
    const auto &s = sin_svd.singularValues();
    double smin = s.size() ? s(s.size() - 1) : 0.0;
    if (qb.cols() > resid.rows() - qa.cols()) smin = 0.0;
    return std::asin(std::min(1.0, smin));
  }
  return from_cos;
}

// All principal angles, ascending.
inline Vec principal_angles(const Mat &a, const Mat &b) {
  Mat qa = orthonormal_basis(a), qb = orthonormal_basis(b);
  Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
  Vec s = svd.singularValues();
  Vec out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    out(i) = std::acos(std::clamp(s(i), -1.0, 1.0));
  return out;
}

inline double relative_distance_to_span(const Vec &v, const Mat &basis) {
  double nv = v.norm();
  if (nv == 0) return 0.0;
  Mat q = orthonormal_basis(basis);
  return (v - q * (q.transpose() * v)).norm() / nv;
}

} // namespace torgap
