// SPDX-License-Identifier: Apache-2.0
//
// Stage 1: Doppler estimation. S^T is an L-element uniform-array snapshot
// matrix (M snapshots), so the Doppler shifts are spatial frequencies f = nu T.
#pragma once

#include <string_view>
#include <vector>

#include "subnyq/aic.hpp"

namespace subnyq {

enum class DopplerMethod { esprit, esprit_fb, dft };

std::string_view to_string(DopplerMethod method) noexcept;
DopplerMethod doppler_method_from_string(std::string_view name);

struct DopplerEstimate {
  std::vector<double> dopplers_hz;    // ascending
  std::vector<double> spatial_freqs;  // nu * T, in (-1/2, 1/2)
  DopplerMethod method = DopplerMethod::esprit;
  /// Covariance eigenvalues, descending (the smoothed covariance for
  /// esprit-fb; empty for dft).
  RVector eigenvalues;
};

/// R = X X^H / M with X = S^T (L x M).
CMatrix snapshot_covariance(const DataMatrix& s);

/// TLS-ESPRIT on the L x L snapshot covariance. Throws Error(size) when the
/// model order is not below L and Error(degenerate_subspace) when the
/// covariance has fewer than `model_order` numerically nonzero eigenvalues
/// (coherent groups; use esprit_fb_doppler).
DopplerEstimate esprit_doppler(const DataMatrix& s, int model_order);

/// L - ceil(L/4), the default maximum-overlap subarray length.
int default_subarray_len(int num_pulses);

/// Forward/backward spatially smoothed TLS-ESPRIT. `subarray_len` <= 0
/// selects the default.
DopplerEstimate esprit_fb_doppler(const DataMatrix& s, int model_order, int subarray_len = 0);

/// L-point DFT along the pulses, magnitudes summed over snapshots, the
/// `model_order` largest peaks mapped to bin / (L T).
DopplerEstimate dft_doppler(const DataMatrix& s, int model_order);

DopplerEstimate estimate_doppler(const DataMatrix& s, int model_order, DopplerMethod method);

/// Minimum-description-length order over 0..L-2. Heuristic: eigenvalues are
/// floored at 1e-10 of the largest so exact-arithmetic zeros tie.
int estimate_model_order(const DataMatrix& s);

/// Mean of the L - model_order smallest covariance eigenvalues, i.e. the
/// per-entry compressed noise variance under white noise.
double estimate_noise_variance(const DataMatrix& s, int model_order);

/// Collapses estimates closer than `tol_hz` into their mean; output ascending.
std::vector<double> merge_close(std::vector<double> dopplers_hz, double tol_hz);

}  // namespace subnyq
