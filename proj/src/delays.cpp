// SPDX-License-Identifier: Apache-2.0
#include "subnyq/delays.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "subnyq/error.hpp"

namespace subnyq {

DelayDictionary::DelayDictionary(std::shared_ptr<const MeasurementMatrix> mm,
                                 const RadarParams& params, double spacing_s)
    : mm_(std::move(mm)), params_(params), spacing_(spacing_s) {
  params_.validate();
  if (!mm_ || mm_->cols() != params_.nyq_count()) {
    throw Error(ErrorKind::size, "dictionary: measurement matrix does not match N");
  }
  if (!(spacing_s > 0.0)) throw Error(ErrorKind::size, "dictionary: grid spacing must be positive");
  const double span = params_.max_delay_s();
  const auto count = static_cast<Eigen::Index>(std::ceil(span / spacing_s - 1e-9));
  if (count < 1) throw Error(ErrorKind::size, "dictionary: empty delay grid");

  atoms_.resize(mm_->rows(), count);
  norms_.resize(count);
  delays_.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k) {
    const double tau = static_cast<double>(k) * spacing_s;
    delays_.push_back(tau);
    atoms_.col(k) = compressed_atom(tau);
    norms_(k) = atoms_.col(k).norm();
  }
}

CVector DelayDictionary::compressed_atom(double delay_s) const {
  const SparseAtom atom = sparse_atom(params_, delay_s);
  return mm_->apply_segment(atom.first, atom.values);
}

CVector DelayDictionary::compressed_atom_derivative(double delay_s) const {
  const SparseAtom atom = sparse_atom_derivative(params_, delay_s);
  return mm_->apply_segment(atom.first, atom.values);
}

DelayDictionary build_dictionary(std::shared_ptr<const MeasurementMatrix> mm,
                                 const RadarParams& params, double spacing_s) {
  return DelayDictionary(std::move(mm), params, spacing_s);
}

DelayDictionary build_dictionary(const MeasurementMatrix& mm, const RadarParams& params,
                                 double spacing_s) {
  return DelayDictionary(std::make_shared<const MeasurementMatrix>(mm), params, spacing_s);
}

void PursuitConfig::validate() const {
  if (max_atoms < 1) throw Error(ErrorKind::config, "max_atoms must be at least 1");
  if (refine_max_iters < 1) throw Error(ErrorKind::config, "refine_max_iters must be at least 1");
  if (!(grid_spacing_cells > 0.0 && grid_spacing_cells <= 1.0)) {
    throw Error(ErrorKind::config, "grid spacing must lie in (0, 1] delay cells");
  }
  if (residual_stop_ratio < 0.0 || refine_step_tol <= 0.0) {
    throw Error(ErrorKind::config, "stop tolerances must be positive");
  }
}

namespace {

struct Fit {
  CMatrix atoms;  // M x q
  CVector gains;
  CVector residual;
  double objective = std::numeric_limits<double>::infinity();
  double condition = std::numeric_limits<double>::infinity();
};

double condition_number(const CMatrix& d) {
  if (d.cols() == 0) return 1.0;
  const RVector sv = Eigen::JacobiSVD<CMatrix>(d).singularValues();
  const double lo = sv(sv.size() - 1);
  return lo > 0.0 ? sv(0) / lo : std::numeric_limits<double>::infinity();
}

Fit fit(const CVector& s, const DelayDictionary& dict, const std::vector<double>& delays) {
  Fit f;
  f.atoms.resize(s.size(), static_cast<Eigen::Index>(delays.size()));
  for (std::size_t k = 0; k < delays.size(); ++k) {
    f.atoms.col(static_cast<Eigen::Index>(k)) = dict.compressed_atom(delays[k]);
  }
  f.condition = condition_number(f.atoms);
  f.gains = f.atoms.colPivHouseholderQr().solve(s);
  f.residual = s - f.atoms * f.gains;
  f.objective = f.residual.squaredNorm();
  return f;
}

double clamp_delay(const RadarParams& params, double tau) {
  const double hi = params.max_delay_s() * (1.0 - 1e-12);
  return std::clamp(tau, 0.0, hi);
}

}  // namespace

RefineResult refine_delays(const CVector& s, const DelayDictionary& dict,
                           std::vector<double> delays_s, const PursuitConfig& cfg) {
  const RadarParams& params = dict.params();
  const double cell = params.delay_cell_s();
  const auto q = static_cast<Eigen::Index>(delays_s.size());
  RefineResult out;
  Fit current = fit(s, dict, delays_s);
  out.objective = current.objective;
  if (q == 0) {
    out.delays_s = std::move(delays_s);
    return out;
  }

  double damping = 1e-3;
  auto qr = current.atoms.colPivHouseholderQr();
  while (out.iterations < cfg.refine_max_iters) {
    // Kaufman's variable-projection Jacobian in delay-cell units:
    // J_k = -P_perp (d atom_k / du) alpha_k.
    CMatrix jac(s.size(), q);
    for (Eigen::Index k = 0; k < q; ++k) {
      const CVector dk = cell * dict.compressed_atom_derivative(delays_s[static_cast<std::size_t>(k)]) *
                         current.gains(k);
      jac.col(k) = -(dk - current.atoms * qr.solve(dk));
    }
    const RMatrix hess = (jac.adjoint() * jac).real();
    const RVector grad = (jac.adjoint() * current.residual).real();

    bool accepted = false;
    bool converged = false;
    while (out.iterations < cfg.refine_max_iters) {
      ++out.iterations;
      RMatrix lhs = hess;
      lhs.diagonal() += damping * hess.diagonal().cwiseMax(1e-12);
      const RVector step = -lhs.ldlt().solve(grad);
      if (!step.allFinite()) break;
      if (step.cwiseAbs().maxCoeff() < cfg.refine_step_tol) {
        converged = true;
        break;
      }
      std::vector<double> trial = delays_s;
      for (Eigen::Index k = 0; k < q; ++k) {
        trial[static_cast<std::size_t>(k)] =
            clamp_delay(params, trial[static_cast<std::size_t>(k)] + step(k) * cell);
      }
      Fit candidate = fit(s, dict, trial);
      if (candidate.objective < current.objective && candidate.condition <= cfg.condition_cap) {
        const double moved = step.cwiseAbs().maxCoeff();
        delays_s = std::move(trial);
        current = std::move(candidate);
        qr = current.atoms.colPivHouseholderQr();
        damping = std::max(damping / 10.0, 1e-12);
        ++out.accepted_steps;
        accepted = true;
        converged = moved < cfg.refine_step_tol;
        break;
      }
      damping *= 10.0;
      if (damping > 1e12) break;
    }
    if (!accepted || converged) break;
  }
  out.delays_s = std::move(delays_s);
  out.objective = current.objective;
  return out;
}

GroupEstimate pursue_group(const PerDopplerVector& s_v, const DelayDictionary& dict,
                           const PursuitConfig& cfg, double noise_variance) {
  cfg.validate();
  const CVector& s = s_v.s_v;
  if (s.size() != dict.atoms().rows()) {
    throw Error(ErrorKind::size, "per-Doppler vector length does not match the dictionary");
  }
  GroupEstimate ge;
  ge.doppler_hz = s_v.doppler_hz;
  ge.predicted_snr_gain = s_v.predicted_snr_gain;

  const double s_norm = s.norm();
  const double m = static_cast<double>(s.size());
  const double noise_floor =
      noise_variance > 0.0 ? noise_variance * (m + cfg.noise_stop_sigmas * std::sqrt(m)) : 0.0;

  std::vector<double> active;
  CVector gains;
  CVector residual = s;
  double r_norm = s_norm;
  ge.residual_norms.push_back(r_norm);

  while (static_cast<int>(active.size()) < cfg.max_atoms) {
    if (r_norm <= cfg.residual_stop_ratio * s_norm) break;
    if (!active.empty() && r_norm * r_norm <= noise_floor) break;

    const RVector score =
        (dict.atoms().adjoint() * residual).cwiseAbs().cwiseQuotient(dict.norms().cwiseMax(1e-300));
    Eigen::Index best = 0;
    score.maxCoeff(&best);

    std::vector<double> candidate = active;
    candidate.push_back(dict.grid_delays()[static_cast<std::size_t>(best)]);
    if (fit(s, dict, candidate).condition > cfg.condition_cap) break;

    RefineResult refined = refine_delays(s, dict, candidate, cfg);
    ge.refine_iterations += refined.iterations;
    if (refined.accepted_steps == 0 && refined.iterations >= cfg.refine_max_iters) {
      ++ge.refine_failures;
    }
    Fit f = fit(s, dict, refined.delays_s);
    if (f.condition > cfg.condition_cap) break;
    const double new_norm = std::sqrt(f.objective);
    if (new_norm > r_norm) break;

    active = std::move(refined.delays_s);
    gains = f.gains;
    residual = f.residual;
    r_norm = new_norm;
    ge.residual_norms.push_back(r_norm);
    ++ge.iterations;
  }

  ge.delays_s = active;
  ge.gains.assign(gains.data(), gains.data() + gains.size());
  return ge;
}

std::vector<GroupEstimate> estimate_all(const DataMatrix& s, const DelayDictionary& dict,
                                        std::span<const double> dopplers_hz,
                                        const PursuitConfig& cfg, double noise_variance) {
  std::vector<GroupEstimate> out;
  if (dopplers_hz.empty()) return out;
  const DopplerMatrix dm =
      build_doppler_matrix(dopplers_hz, static_cast<int>(s.cols()), s.params.pri_s);
  const std::vector<PerDopplerVector> split = pinv_decompose(s, dm);
  out.reserve(split.size());
  for (const auto& v : split) {
    const double group_noise =
        noise_variance > 0.0 && v.predicted_snr_gain > 0.0 ? noise_variance / v.predicted_snr_gain : 0.0;
    out.push_back(pursue_group(v, dict, cfg, group_noise));
  }
  return out;
}

}  // namespace subnyq
