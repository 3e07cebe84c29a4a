#pragma once

// 50-digit binary float for the raw-metric cross-check.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace torgap {
using Extended = boost::multiprecision::cpp_bin_float_50;
} // namespace torgap

// The Boost 1.74 traits lack infinity() and quiet_NaN(), which Eigen's
// generic hypot needs; route hypot to Boost directly.
namespace Eigen::internal {
template <>
struct hypot_impl<torgap::Extended> {
  static torgap::Extended run(const torgap::Extended &x,
                              const torgap::Extended &y) {
    return boost::multiprecision::hypot(x, y);
  }
};
} // namespace Eigen::internal
