// SPDX-License-Identifier: Apache-2.0
//
// Radar waveform, target scene and Nyquist-rate echo synthesis.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace subnyq {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Nyquist-rate samples of one PRI (length N).
using NyquistVector = CVector;

inline constexpr double kPi = 3.14159265358979323846;

/// Waveform and timing constants. `nyq_count()` and the cell sizes are
/// derived, never stored, so a params value cannot become inconsistent.
struct RadarParams {
  double bandwidth_hz = 0.0;
  double pulse_width_s = 0.0;
  double pri_s = 0.0;
  int num_pulses = 0;

  double nyq_interval_s() const { return 1.0 / bandwidth_hz; }
  int nyq_count() const;
  double delay_cell_s() const { return 1.0 / bandwidth_hz; }
  double doppler_cell_hz() const { return 1.0 / (num_pulses * pri_s); }
  /// Upper (exclusive) bound of the unambiguous delay range, T - T_p.
  double max_delay_s() const { return pri_s - pulse_width_s; }
  /// Unambiguous Doppler half-range 1/(2T); valid shifts lie strictly inside.
  double max_doppler_hz() const { return 0.5 / pri_s; }

  /// Throws Error(domain) when any invariant is violated.
  void validate() const;

  /// N = 1000, M = 200 scale: B = 10 MHz, T_p = 10 us, T = 100 us, L = 50.
  static RadarParams desk();
  /// B = 100 MHz, T_p = 10 us, T = 100 us, L = 100 (N = 10000).
  static RadarParams paper();
};

struct Target {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  cplx gain{1.0, 0.0};
};

struct DopplerGroup {
  double doppler_hz = 0.0;
  std::vector<std::size_t> members;
};

/// Targets partitioned into groups of identical Doppler shift, groups sorted
/// ascending by Doppler.
class Scene {
public:
  Scene(const RadarParams& params, std::vector<Target> targets,
        double tol_hz = 0.0);

  const RadarParams& params() const noexcept { return params_; }
  const std::vector<Target>& targets() const noexcept { return targets_; }
  const std::vector<DopplerGroup>& groups() const noexcept { return groups_; }
  std::size_t num_targets() const noexcept { return targets_.size(); }
  std::size_t num_groups() const noexcept { return groups_.size(); }
  bool empty() const noexcept { return targets_.empty(); }

private:
  RadarParams params_;
  std::vector<Target> targets_;
  std::vector<DopplerGroup> groups_;
};

/// Groups targets whose Doppler shifts lie within `tol_hz` of an existing
/// group's key (the first member's shift). Members of a merged group take the
/// key's Doppler value.
Scene group_by_doppler(const RadarParams& params, std::vector<Target> targets,
                       double tol_hz = 0.0);

/// Up-chirp envelope exp(j*pi*(B/T_p)*t^2) on [0, T_p), zero elsewhere.
cplx lfm_baseband(const RadarParams& params, double t);

/// d/dt of the envelope inside its support. Samples within T_nyq/100 of a
/// support edge use a one-sided difference that stays inside the pulse.
cplx lfm_derivative(const RadarParams& params, double t);

/// Nonzero run of an atom: samples `values` starting at index `first`.
struct SparseAtom {
  Eigen::Index first = 0;
  CVector values;
};

/// psi(tau): entry n is g(n*T_nyq - tau). Throws Error(domain) when tau is
/// outside [0, T - T_p).
NyquistVector atom_samples(const RadarParams& params, double delay_s);
SparseAtom sparse_atom(const RadarParams& params, double delay_s);
/// d psi / d tau on the same support as `sparse_atom`.
SparseAtom sparse_atom_derivative(const RadarParams& params, double delay_s);
NyquistVector densify(const SparseAtom& atom, Eigen::Index n);

/// psi_i = sum_j alpha_ij psi(tau_ij) for every group, as the columns of an
/// N x K_v matrix (ordered like `scene.groups()`).
CMatrix group_waveforms(const Scene& scene);

/// r^l = sum_i exp(j 2 pi nu_i l T) psi_i.
NyquistVector echo_nyquist(const Scene& scene, int pulse_index);

/// All L pulses at once as an N x L matrix; column l equals echo_nyquist(l).
CMatrix echo_matrix(const Scene& scene);

/// a(nu) = [1, e^{j2 pi nu T}, ..., e^{j2 pi nu (L-1) T}].
CVector steering_vector(double doppler_hz, int num_pulses, double pri_s);

}  // namespace subnyq
