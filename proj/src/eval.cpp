// SPDX-License-Identifier: Apache-2.0
#include "subnyq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "subnyq/error.hpp"

namespace subnyq {

std::vector<TargetEstimate> flatten(std::span<const GroupEstimate> groups) {
  std::vector<TargetEstimate> out;
  for (const auto& g : groups) {
    for (std::size_t j = 0; j < g.delays_s.size(); ++j) {
      out.push_back({g.delays_s[j], g.doppler_hz, g.gains[j]});
    }
  }
  return out;
}

TopK select_top_k(std::vector<TargetEstimate> estimates, int k) {
  if (k < 0) throw Error(ErrorKind::domain, "K must be non-negative");
  std::sort(estimates.begin(), estimates.end(), [](const TargetEstimate& a, const TargetEstimate& b) {
    const double ga = std::abs(a.gain);
    const double gb = std::abs(b.gain);
    if (ga != gb) return ga > gb;
    if (a.delay_s != b.delay_s) return a.delay_s < b.delay_s;
    return a.doppler_hz < b.doppler_hz;
  });
  TopK out;
  out.shortfall = static_cast<int>(estimates.size()) < k;
  if (!out.shortfall) estimates.resize(static_cast<std::size_t>(k));
  out.selected = std::move(estimates);
  return out;
}

std::vector<int> hungarian(const RMatrix& cost) {
  // Potentials formulation, 1-based internally; rows <= cols.
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n > m) throw Error(ErrorKind::size, "hungarian: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return assignment;
}

MatchResult match_targets(std::span<const Target> truth, std::span<const TargetEstimate> estimates,
                          const CellSizes& cells) {
  MatchResult out;
  const auto nt = truth.size();
  const auto ne = estimates.size();
  if (nt == 0 || ne == 0) {
    for (std::size_t i = 0; i < nt; ++i) out.unmatched_truth.push_back(i);
    for (std::size_t j = 0; j < ne; ++j) out.unmatched_estimates.push_back(j);
    return out;
  }
  const bool by_truth = nt <= ne;
  const auto rows = static_cast<Eigen::Index>(by_truth ? nt : ne);
  const auto cols = static_cast<Eigen::Index>(by_truth ? ne : nt);
  auto sq_dist = [&](std::size_t t, std::size_t e) {
    const double dt = (estimates[e].delay_s - truth[t].delay_s) / cells.delay_s;
    const double dn = (estimates[e].doppler_hz - truth[t].doppler_hz) / cells.doppler_hz;
    return dt * dt + dn * dn;
  };
  RMatrix cost(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto t = static_cast<std::size_t>(by_truth ? r : c);
      const auto e = static_cast<std::size_t>(by_truth ? c : r);
      cost(r, c) = sq_dist(t, e);
    }
  }
  const std::vector<int> assign = hungarian(cost);
  std::vector<char> truth_used(nt, 0), est_used(ne, 0);
  for (std::size_t r = 0; r < assign.size(); ++r) {
    const auto c = static_cast<std::size_t>(assign[r]);
    const std::size_t t = by_truth ? r : c;
    const std::size_t e = by_truth ? c : r;
    out.pairs.emplace_back(t, e);
    truth_used[t] = 1;
    est_used[e] = 1;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [t, e] : out.pairs) {
    out.distances.push_back(std::sqrt(sq_dist(t, e)));
    out.delay_errors_s.push_back(estimates[e].delay_s - truth[t].delay_s);
    out.doppler_errors_hz.push_back(estimates[e].doppler_hz - truth[t].doppler_hz);
  }
  for (std::size_t i = 0; i < nt; ++i) {
    if (!truth_used[i]) out.unmatched_truth.push_back(i);
  }
  for (std::size_t j = 0; j < ne; ++j) {
    if (!est_used[j]) out.unmatched_estimates.push_back(j);
  }
  return out;
}

Rrmse rrmse(const MatchResult& match, const CellSizes& cells) {
  const auto k = match.pairs.size();
  if (k == 0) throw Error(ErrorKind::undefined_metric, "RRMSE of an empty match");
  double st = 0.0;
  double sn = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    st += match.delay_errors_s[i] * match.delay_errors_s[i];
    sn += match.doppler_errors_hz[i] * match.doppler_errors_hz[i];
  }
  return {std::sqrt(st / static_cast<double>(k)) / cells.delay_s,
          std::sqrt(sn / static_cast<double>(k)) / cells.doppler_hz};
}

namespace {

// Index of the group each target belongs to.
std::vector<std::size_t> group_of(const Scene& scene) {
  std::vector<std::size_t> g(scene.num_targets(), 0);
  for (std::size_t i = 0; i < scene.num_groups(); ++i) {
    for (std::size_t k : scene.groups()[i].members) g[k] = i;
  }
  return g;
}

}  // namespace

CVector vectorised_model(const Scene& scene, const MeasurementMatrix& mm) {
  const CMatrix s = mm.entries() * echo_matrix(scene);
  return Eigen::Map<const CVector>(s.data(), s.size());
}

CMatrix crb_jacobian(const Scene& scene, const MeasurementMatrix& mm) {
  const auto& params = scene.params();
  const Eigen::Index m = mm.rows();
  const int pulses = params.num_pulses;
  const auto k_count = static_cast<Eigen::Index>(scene.num_targets());
  const auto g_count = static_cast<Eigen::Index>(scene.num_groups());
  const std::vector<std::size_t> grp = group_of(scene);

  CMatrix atoms(m, k_count);
  CMatrix d_atoms(m, k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const Target& t = scene.targets()[static_cast<std::size_t>(k)];
    const SparseAtom a = sparse_atom(params, t.delay_s);
    const SparseAtom da = sparse_atom_derivative(params, t.delay_s);
    atoms.col(k) = mm.apply_segment(a.first, a.values);
    d_atoms.col(k) = mm.apply_segment(da.first, da.values);
  }
  CMatrix group_signal = CMatrix::Zero(m, g_count);  // M psi_i
  for (Eigen::Index k = 0; k < k_count; ++k) {
    group_signal.col(static_cast<Eigen::Index>(grp[static_cast<std::size_t>(k)])) +=
        scene.targets()[static_cast<std::size_t>(k)].gain * atoms.col(k);
  }

  const Eigen::Index cols = 3 * k_count + g_count;
  CMatrix jac(m * pulses, cols);
  for (int l = 0; l < pulses; ++l) {
    auto block = jac.middleRows(static_cast<Eigen::Index>(l) * m, m);
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const Target& t = scene.targets()[static_cast<std::size_t>(k)];
      const cplx phase = std::polar(1.0, 2.0 * kPi * t.doppler_hz * l * params.pri_s);
      block.col(k) = phase * t.gain * d_atoms.col(k);
      block.col(k_count + g_count + k) = phase * atoms.col(k);
      block.col(2 * k_count + g_count + k) = cplx(0.0, 1.0) * phase * atoms.col(k);
    }
    for (Eigen::Index i = 0; i < g_count; ++i) {
      const double nu = scene.groups()[static_cast<std::size_t>(i)].doppler_hz;
      const cplx dphase = cplx(0.0, 2.0 * kPi * l * params.pri_s) *
                          std::polar(1.0, 2.0 * kPi * nu * l * params.pri_s);
      block.col(k_count + i) = dphase * group_signal.col(i);
    }
  }
  return jac;
}

CrbReport crb(const Scene& scene, const MeasurementMatrix& mm, double noise_variance) {
  if (!(noise_variance > 0.0)) throw Error(ErrorKind::domain, "CRB needs a positive noise variance");
  CrbReport rep;
  rep.noise_variance = noise_variance;
  const auto k_count = static_cast<Eigen::Index>(scene.num_targets());
  if (k_count == 0) return rep;
  const CMatrix jac = crb_jacobian(scene, mm);
  const RMatrix fim = (2.0 / noise_variance) * (jac.adjoint() * jac).real();

  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<std::size_t> grp = group_of(scene);
  // Scale to unit diagonal first; delays and gains differ by ~1e12.
  const RVector diag = fim.diagonal();
  rep.singular = !(diag.minCoeff() > 0.0);
  RMatrix scaled;
  RVector d;
  if (!rep.singular) {
    d = diag.cwiseSqrt().cwiseInverse();
    scaled = d.asDiagonal() * fim * d.asDiagonal();
    const RVector ev = Eigen::SelfAdjointEigenSolver<RMatrix>(scaled, Eigen::EigenvaluesOnly).eigenvalues();
    rep.singular = !(ev(0) > ev(ev.size() - 1) * 1e-15);
  }
  if (rep.singular) {
    rep.tau_s2.assign(static_cast<std::size_t>(k_count), inf);
    rep.nu_hz2.assign(static_cast<std::size_t>(k_count), inf);
    return rep;
  }
  const RMatrix inv_scaled = scaled.ldlt().solve(RMatrix::Identity(fim.rows(), fim.cols()));
  const RMatrix cov = d.asDiagonal() * inv_scaled * d.asDiagonal();
  for (Eigen::Index k = 0; k < k_count; ++k) {
    rep.tau_s2.push_back(cov(k, k));
    const auto gi = k_count + static_cast<Eigen::Index>(grp[static_cast<std::size_t>(k)]);
    rep.nu_hz2.push_back(cov(gi, gi));
  }
  return rep;
}

double empirical_snr(const Scene& scene, const MeasurementMatrix& mm, const NoiseSpec& noise,
                     int trials, Rng& rng) {
  if (trials < 1) throw Error(ErrorKind::domain, "empirical SNR needs at least one trial");
  if (scene.empty()) return -std::numeric_limits<double>::infinity();
  if (noise.psd == 0.0) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  long count = 0;
  for (int t = 0; t < trials; ++t) {
    const AssembledData d = assemble_data(scene, mm, noise, rng);
    for (Eigen::Index l = 0; l < d.data.cols(); ++l) {
      const double signal = (d.data.entries.col(l) - d.true_noise.entries.col(l)).squaredNorm();
      sum += signal / d.true_noise.entries.col(l).squaredNorm();
      ++count;
    }
  }
  return 10.0 * std::log10(sum / static_cast<double>(count));
}

}  // namespace subnyq
