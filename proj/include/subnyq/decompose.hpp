// SPDX-License-Identifier: Apache-2.0
//
// Stage 2a: split S into one M-length measurement vector per Doppler shift by
// post-multiplying with the pseudo-inverse of the Vandermonde matrix Theta.
#pragma once

#include <span>
#include <vector>

#include "subnyq/aic.hpp"

namespace subnyq {

inline constexpr double kDefaultConditionCap = 1e12;

struct DopplerMatrix {
  std::vector<double> dopplers_hz;
  int num_pulses = 0;
  double pri_s = 0.0;
  CMatrix theta;  // K_v x L, row i = a(nu_i)^T
  CMatrix pinv;   // L x K_v
  double condition = 1.0;  // of Theta Theta^H
  /// Condition above the cap: `pinv` came from the SVD fallback.
  bool ill_conditioned = false;

  int size() const { return static_cast<int>(dopplers_hz.size()); }
};

/// Theta^H (Theta Theta^H)^{-1}, with a complete-orthogonal-decomposition
/// fallback above `condition_cap`. Throws Error(rank) on aliased duplicates
/// and Error(size) unless K_v < L.
DopplerMatrix build_doppler_matrix(std::span<const double> dopplers_hz, int num_pulses,
                                   double pri_s, double condition_cap = kDefaultConditionCap);

struct PerDopplerVector {
  double doppler_hz = 0.0;
  CVector s_v;                    // column i of S Theta^+
  double predicted_snr_gain = 0;  // gamma_i in (0, L]
};

std::vector<PerDopplerVector> pinv_decompose(const DataMatrix& s, const DopplerMatrix& dm);

/// b(nu_i) = P_i^* a^* / (a^T P_i^* a^*), P_i projecting onto the complement
/// of the other steering vectors. Equal to column i of Theta^+.
CVector b_vector(const DopplerMatrix& dm, int i);

/// |a^T P_i^* a^*|^2 / ||P_i a||^2; equals L when a(nu_i) is orthogonal to
/// every other steering vector. Note 1/gamma_i = ||b(nu_i)||^2.
double snr_gain(const DopplerMatrix& dm, int i);

}  // namespace subnyq
