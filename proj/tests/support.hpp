// Small helpers shared by the unit tests.
#pragma once

#include <cmath>
#include <random>

#include "subnyq/scene.hpp"

namespace testing {

using subnyq::cplx;
using subnyq::CMatrix;
using subnyq::CVector;

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double rel_diff(const CMatrix& a, const CMatrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline CVector random_cvector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// A small radar: N = 64, L = 16, T_p = 8 samples.
inline subnyq::RadarParams small_radar() {
  return {1e6, 8e-6, 64e-6, 16};
}

}  // namespace testing
