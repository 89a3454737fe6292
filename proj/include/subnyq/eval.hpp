// SPDX-License-Identifier: Apache-2.0
//
// Metrics: top-K selection, truth/estimate assignment, RRMSE, Cramer-Rao
// bound of the vectorised compressed model, empirical SNR.
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "subnyq/aic.hpp"
#include "subnyq/delays.hpp"

namespace subnyq {

struct CellSizes {
  double delay_s = 0.0;     // tau_0 = 1/B
  double doppler_hz = 0.0;  // nu_0 = 1/(L T)

  static CellSizes of(const RadarParams& params) {
    return {params.delay_cell_s(), params.doppler_cell_hz()};
  }
};

struct TargetEstimate {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  cplx gain{0.0, 0.0};
};

std::vector<TargetEstimate> flatten(std::span<const GroupEstimate> groups);

struct TopK {
  std::vector<TargetEstimate> selected;
  bool shortfall = false;  // fewer than K candidates were available
};

/// K largest |gain|; ties broken by smaller delay, then smaller Doppler.
TopK select_top_k(std::vector<TargetEstimate> estimates, int k);

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (truth, estimate)
  std::vector<std::size_t> unmatched_truth;
  std::vector<std::size_t> unmatched_estimates;
  std::vector<double> distances;  // normalised distance per pair, in cells
  std::vector<double> delay_errors_s;
  std::vector<double> doppler_errors_hz;
};

/// Minimum-cost one-to-one assignment on the smaller side, cost
/// ((tau^ - tau)/tau_0)^2 + ((nu^ - nu)/nu_0)^2.
MatchResult match_targets(std::span<const Target> truth, std::span<const TargetEstimate> estimates,
                          const CellSizes& cells);

/// Hungarian assignment on a rows x cols cost matrix with rows <= cols;
/// returns the column assigned to each row.
std::vector<int> hungarian(const RMatrix& cost);

struct Rrmse {
  double tau = 0.0;  // delay cells
  double nu = 0.0;   // Doppler cells
};

/// Throws Error(undefined_metric) on an empty match.
Rrmse rrmse(const MatchResult& match, const CellSizes& cells);

struct CrbReport {
  std::vector<double> tau_s2;   // per target
  std::vector<double> nu_hz2;   // per target (its group's Doppler)
  double noise_variance = 0.0;
  bool singular = false;
};

/// Jacobian of vec(M Psi Theta) with respect to
/// [tau_1..tau_K, nu_1..nu_Kv, Re alpha_1..K, Im alpha_1..K]
/// (targets in scene order, Dopplers in group order); ML x (3K + K_v).
CMatrix crb_jacobian(const Scene& scene, const MeasurementMatrix& mm);

/// Noiseless vec(M Psi Theta) for a scene, the forward model the Jacobian
/// differentiates.
CVector vectorised_model(const Scene& scene, const MeasurementMatrix& mm);

/// diag((2/sigma^2 Re(J^H J))^{-1}) restricted to delays and Dopplers.
CrbReport crb(const Scene& scene, const MeasurementMatrix& mm, double noise_variance);

/// Mean over trials and pulses of ||s_cs - n_cs||^2 / ||n_cs||^2, in dB.
/// +inf for zero noise, -inf for an empty scene.
double empirical_snr(const Scene& scene, const MeasurementMatrix& mm, const NoiseSpec& noise,
                     int trials, Rng& rng);

}  // namespace subnyq
