// SPDX-License-Identifier: Apache-2.0
//
// Stage 2b: per-Doppler delay and gain estimation by greedy pursuit over a
// delay grid, with joint continuous refinement of the active delays.
#pragma once

#include <memory>
#include <span>
#include <vector>

#include "subnyq/aic.hpp"
#include "subnyq/decompose.hpp"

namespace subnyq {

/// Grid tau_k = k * spacing over [0, T - T_p) with compressed atoms
/// d_k = M psi(tau_k) as columns. Immutable and shareable between groups.
class DelayDictionary {
public:
  DelayDictionary(std::shared_ptr<const MeasurementMatrix> mm, const RadarParams& params,
                  double spacing_s);

  const RadarParams& params() const noexcept { return params_; }
  const MeasurementMatrix& measurement() const noexcept { return *mm_; }
  const std::vector<double>& grid_delays() const noexcept { return delays_; }
  const CMatrix& atoms() const noexcept { return atoms_; }
  const RVector& norms() const noexcept { return norms_; }
  double spacing_s() const noexcept { return spacing_; }
  Eigen::Index size() const noexcept { return atoms_.cols(); }

  /// M psi(tau) at an arbitrary delay in [0, T - T_p).
  CVector compressed_atom(double delay_s) const;
  /// M d psi / d tau at an arbitrary delay.
  CVector compressed_atom_derivative(double delay_s) const;

private:
  std::shared_ptr<const MeasurementMatrix> mm_;
  RadarParams params_;
  double spacing_;
  std::vector<double> delays_;
  CMatrix atoms_;
  RVector norms_;
};

/// Throws Error(size) on an empty grid or a non-positive spacing.
DelayDictionary build_dictionary(std::shared_ptr<const MeasurementMatrix> mm,
                                 const RadarParams& params, double spacing_s);
DelayDictionary build_dictionary(const MeasurementMatrix& mm, const RadarParams& params,
                                 double spacing_s);

struct PursuitConfig {
  int max_atoms = 3;
  double residual_stop_ratio = 1e-3;
  int refine_max_iters = 50;       // P
  double refine_step_tol = 1e-6;   // delay cells
  double grid_spacing_cells = 1.0; // grid spacing / tau_0, at most 1
  /// Noise-aware stop: with a known per-entry noise variance sigma^2 of s_v,
  /// stop once ||r||^2 <= M sigma^2 + noise_stop_sigmas * sqrt(M) sigma^2.
  double noise_stop_sigmas = 3.0;
  double condition_cap = 1e10;

  void validate() const;
};

struct GroupEstimate {
  double doppler_hz = 0.0;
  std::vector<double> delays_s;
  std::vector<cplx> gains;
  std::vector<double> residual_norms;  // index 0 is ||s_v||
  int iterations = 0;
  int refine_iterations = 0;
  int refine_failures = 0;  // refinements that left a grid value in place
  double predicted_snr_gain = 0.0;
};

/// Greedy pursuit on one per-Doppler vector. `noise_variance` is the per-entry
/// noise variance of s_v (0 disables the noise-aware stop).
GroupEstimate pursue_group(const PerDopplerVector& s_v, const DelayDictionary& dict,
                           const PursuitConfig& cfg, double noise_variance = 0.0);

/// Joint Gauss-Newton refinement of `delays_s` on the variable-projection
/// objective ||s - D D^+ s||^2; exposed for testing.
struct RefineResult {
  std::vector<double> delays_s;
  double objective = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
};
RefineResult refine_delays(const CVector& s, const DelayDictionary& dict,
                           std::vector<double> delays_s, const PursuitConfig& cfg);

/// Pinv decomposition of S on `dopplers_hz` followed by one pursuit per
/// Doppler. `noise_variance` is the per-entry compressed noise variance of S;
/// each group uses noise_variance / gamma_i.
std::vector<GroupEstimate> estimate_all(const DataMatrix& s, const DelayDictionary& dict,
                                        std::span<const double> dopplers_hz,
                                        const PursuitConfig& cfg, double noise_variance = 0.0);

}  // namespace subnyq
