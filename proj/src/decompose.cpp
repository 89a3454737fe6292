// SPDX-License-Identifier: Apache-2.0
#include "subnyq/decompose.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "subnyq/error.hpp"

namespace subnyq {

DopplerMatrix build_doppler_matrix(std::span<const double> dopplers_hz, int num_pulses,
                                   double pri_s, double condition_cap) {
  const int k = static_cast<int>(dopplers_hz.size());
  if (k >= num_pulses) {
    throw Error(ErrorKind::size, "need fewer Doppler shifts than pulses");
  }
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      double df = (dopplers_hz[i] - dopplers_hz[j]) * pri_s;
      df -= std::round(df);
      if (std::abs(df) < 1e-12) {
        throw Error(ErrorKind::rank, "duplicate Doppler shifts make Theta rank deficient");
      }
    }
  }

  DopplerMatrix dm;
  dm.dopplers_hz.assign(dopplers_hz.begin(), dopplers_hz.end());
  dm.num_pulses = num_pulses;
  dm.pri_s = pri_s;
  dm.theta.resize(k, num_pulses);
  for (int i = 0; i < k; ++i) {
    dm.theta.row(i) = steering_vector(dopplers_hz[i], num_pulses, pri_s).transpose();
  }
  if (k == 0) {
    dm.pinv.resize(num_pulses, 0);
    return dm;
  }

  const CMatrix gram = dm.theta * dm.theta.adjoint();
  const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  dm.condition = ev(0) > 0.0 ? ev(k - 1) / ev(0) : std::numeric_limits<double>::infinity();
  if (dm.condition <= condition_cap) {
    dm.pinv = dm.theta.adjoint() * gram.llt().solve(CMatrix::Identity(k, k));
  } else {
    dm.ill_conditioned = true;
    dm.pinv = dm.theta.completeOrthogonalDecomposition().pseudoInverse();
  }
  return dm;
}

std::vector<PerDopplerVector> pinv_decompose(const DataMatrix& s, const DopplerMatrix& dm) {
  if (s.cols() != dm.num_pulses) {
    throw Error(ErrorKind::size, "data matrix has " + std::to_string(s.cols()) +
                                     " pulses, Doppler matrix " + std::to_string(dm.num_pulses));
  }
  const CMatrix split = s.entries * dm.pinv;
  std::vector<PerDopplerVector> out;
  out.reserve(static_cast<std::size_t>(dm.size()));
  for (int i = 0; i < dm.size(); ++i) {
    out.push_back({dm.dopplers_hz[static_cast<std::size_t>(i)], split.col(i), snr_gain(dm, i)});
  }
  return out;
}

namespace {

// P_i a(nu_i)
CVector projected_steering(const DopplerMatrix& dm, int i) {
  const int k = dm.size();
  if (i < 0 || i >= k) throw Error(ErrorKind::size, "Doppler index out of range");
  const CVector a = dm.theta.row(i).transpose();
  if (k == 1) return a;
  CMatrix others(dm.num_pulses, k - 1);
  for (int j = 0, c = 0; j < k; ++j) {
    if (j != i) others.col(c++) = dm.theta.row(j).transpose();
  }
  const CMatrix gram = others.adjoint() * others;
  return a - others * gram.ldlt().solve(others.adjoint() * a);
}

}  // namespace

CVector b_vector(const DopplerMatrix& dm, int i) {
  const CVector a = dm.theta.row(i).transpose();
  const CVector pa_conj = projected_steering(dm, i).conjugate();
  const cplx denom = a.transpose() * pa_conj;
  if (std::abs(denom) == 0.0) throw Error(ErrorKind::rank, "steering vector lies in the span of the others");
  return pa_conj / denom;
}

double snr_gain(const DopplerMatrix& dm, int i) {
  const CVector a = dm.theta.row(i).transpose();
  const CVector pa = projected_steering(dm, i);
  const cplx num = a.transpose() * pa.conjugate();
  const double den = pa.squaredNorm();
  return den > 0.0 ? std::norm(num) / den : 0.0;
}

}  // namespace subnyq
