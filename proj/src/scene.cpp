// SPDX-License-Identifier: Apache-2.0
#include "subnyq/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "subnyq/error.hpp"

namespace subnyq {

int RadarParams::nyq_count() const {
  return static_cast<int>(std::lround(pri_s * bandwidth_hz));
}

void RadarParams::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::domain, "invalid radar params: " + msg);
  };
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) fail("bandwidth must be positive");
  if (!(pulse_width_s > 0.0)) fail("pulse width must be positive");
  if (!(pulse_width_s < pri_s)) fail("pulse width must be shorter than the PRI");
  if (num_pulses < 2) fail("need at least 2 pulses");
  const int n = nyq_count();
  if (n < 2) fail("fewer than 2 Nyquist samples per PRI");
  if (nyq_interval_s() * n > pri_s + nyq_interval_s() * (1.0 + 1e-9)) {
    fail("Nyquist samples overrun the PRI");
  }
}

RadarParams RadarParams::desk() { return {10e6, 10e-6, 100e-6, 50}; }

RadarParams RadarParams::paper() { return {100e6, 10e-6, 100e-6, 100}; }

Scene::Scene(const RadarParams& params, std::vector<Target> targets,
             double tol_hz)
    : params_(params), targets_(std::move(targets)) {
  params_.validate();
  if (tol_hz < 0.0) throw Error(ErrorKind::domain, "negative Doppler grouping tolerance");
  for (const auto& t : targets_) {
    if (!(t.delay_s >= 0.0 && t.delay_s < params_.max_delay_s())) {
      std::ostringstream os;
      os << "target delay " << t.delay_s << " s outside [0, T - T_p)";
      throw Error(ErrorKind::domain, os.str());
    }
    if (!(std::abs(t.doppler_hz) < params_.max_doppler_hz())) {
      std::ostringstream os;
      os << "target Doppler " << t.doppler_hz << " Hz outside (-1/2T, 1/2T)";
      throw Error(ErrorKind::domain, os.str());
    }
  }

  for (std::size_t k = 0; k < targets_.size(); ++k) {
    const double nu = targets_[k].doppler_hz;
    auto it = std::find_if(groups_.begin(), groups_.end(), [&](const DopplerGroup& g) {
      return std::abs(g.doppler_hz - nu) <= tol_hz;
    });
    if (it == groups_.end()) {
      groups_.push_back({nu, {k}});
    } else {
      it->members.push_back(k);
      targets_[k].doppler_hz = it->doppler_hz;
    }
  }
  std::stable_sort(groups_.begin(), groups_.end(),
                   [](const DopplerGroup& a, const DopplerGroup& b) {
                     return a.doppler_hz < b.doppler_hz;
                   });
}

Scene group_by_doppler(const RadarParams& params, std::vector<Target> targets,
                       double tol_hz) {
  return Scene(params, std::move(targets), tol_hz);
}

cplx lfm_baseband(const RadarParams& params, double t) {
  if (!(t >= 0.0 && t < params.pulse_width_s)) return {0.0, 0.0};
  const double rate = params.bandwidth_hz / params.pulse_width_s;
  return std::polar(1.0, kPi * rate * t * t);
}

cplx lfm_derivative(const RadarParams& params, double t) {
  const double tp = params.pulse_width_s;
  if (!(t >= 0.0 && t < tp)) return {0.0, 0.0};
  const double h = params.nyq_interval_s() / 100.0;
  // fourth-order one-sided stencils that stay inside the pulse
  auto one_sided = [&](double step) {
    return (-25.0 * lfm_baseband(params, t) + 48.0 * lfm_baseband(params, t + step) -
            36.0 * lfm_baseband(params, t + 2.0 * step) + 16.0 * lfm_baseband(params, t + 3.0 * step) -
            3.0 * lfm_baseband(params, t + 4.0 * step)) / (12.0 * step);
  };
  if (t < h) return one_sided(h);
  if (t > tp - 2.0 * h) return one_sided(-h);
  const double rate = params.bandwidth_hz / tp;
  return cplx(0.0, 2.0 * kPi * rate * t) * lfm_baseband(params, t);
}

namespace {

void check_delay(const RadarParams& params, double delay_s) {
  if (!(delay_s >= 0.0 && delay_s < params.max_delay_s())) {
    std::ostringstream os;
    os << "delay " << delay_s << " s outside [0, " << params.max_delay_s() << ")";
    throw Error(ErrorKind::domain, os.str());
  }
}

// Index range [first, last) of samples with n*T_nyq - tau in [0, T_p).
std::pair<Eigen::Index, Eigen::Index> support(const RadarParams& params, double delay_s) {
  const Eigen::Index n = params.nyq_count();
  const double ts = params.nyq_interval_s();
  auto inside = [&](Eigen::Index k) {
    const double t = static_cast<double>(k) * ts - delay_s;
    return t >= 0.0 && t < params.pulse_width_s;
  };
  Eigen::Index first = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::floor(delay_s / ts)) - 1, 0, n);
  while (first < n && !inside(first)) ++first;
  Eigen::Index last = first;
  while (last < n && inside(last)) ++last;
  return {first, last};
}

template <typename F>
SparseAtom sample_on_support(const RadarParams& params, double delay_s, F&& f) {
  check_delay(params, delay_s);
  const auto [first, last] = support(params, delay_s);
  SparseAtom atom;
  atom.first = first;
  atom.values.resize(last - first);
  const double ts = params.nyq_interval_s();
  for (Eigen::Index k = first; k < last; ++k) {
    atom.values(k - first) = f(static_cast<double>(k) * ts - delay_s);
  }
  return atom;
}

}  // namespace

SparseAtom sparse_atom(const RadarParams& params, double delay_s) {
  return sample_on_support(params, delay_s,
                           [&](double t) { return lfm_baseband(params, t); });
}

SparseAtom sparse_atom_derivative(const RadarParams& params, double delay_s) {
  // psi(tau)[n] = g(n T_nyq - tau), so d/dtau = -g'(.)
  return sample_on_support(params, delay_s,
                           [&](double t) { return -lfm_derivative(params, t); });
}

NyquistVector densify(const SparseAtom& atom, Eigen::Index n) {
  NyquistVector out = NyquistVector::Zero(n);
  out.segment(atom.first, atom.values.size()) = atom.values;
  return out;
}

NyquistVector atom_samples(const RadarParams& params, double delay_s) {
  return densify(sparse_atom(params, delay_s), params.nyq_count());
}

CMatrix group_waveforms(const Scene& scene) {
  const auto& params = scene.params();
  CMatrix psi = CMatrix::Zero(params.nyq_count(), static_cast<Eigen::Index>(scene.num_groups()));
  for (std::size_t i = 0; i < scene.num_groups(); ++i) {
    for (std::size_t k : scene.groups()[i].members) {
      const Target& t = scene.targets()[k];
      const SparseAtom atom = sparse_atom(params, t.delay_s);
      psi.col(static_cast<Eigen::Index>(i)).segment(atom.first, atom.values.size()) +=
          t.gain * atom.values;
    }
  }
  return psi;
}

CVector steering_vector(double doppler_hz, int num_pulses, double pri_s) {
  CVector a(num_pulses);
  for (int l = 0; l < num_pulses; ++l) {
    a(l) = std::polar(1.0, 2.0 * kPi * doppler_hz * l * pri_s);
  }
  return a;
}

NyquistVector echo_nyquist(const Scene& scene, int pulse_index) {
  const auto& params = scene.params();
  if (pulse_index < 0 || pulse_index >= params.num_pulses) {
    throw Error(ErrorKind::domain, "pulse index out of range");
  }
  const CMatrix psi = group_waveforms(scene);
  NyquistVector r = NyquistVector::Zero(params.nyq_count());
  for (std::size_t i = 0; i < scene.num_groups(); ++i) {
    const double phase = 2.0 * kPi * scene.groups()[i].doppler_hz * pulse_index * params.pri_s;
    r += std::polar(1.0, phase) * psi.col(static_cast<Eigen::Index>(i));
  }
  return r;
}

CMatrix echo_matrix(const Scene& scene) {
  const auto& params = scene.params();
  const CMatrix psi = group_waveforms(scene);
  CMatrix theta(static_cast<Eigen::Index>(scene.num_groups()), params.num_pulses);
  for (std::size_t i = 0; i < scene.num_groups(); ++i) {
    theta.row(static_cast<Eigen::Index>(i)) =
        steering_vector(scene.groups()[i].doppler_hz, params.num_pulses, params.pri_s)
            .transpose();
  }
  if (scene.num_groups() == 0) return CMatrix::Zero(params.nyq_count(), params.num_pulses);
  return psi * theta;
}

}  // namespace subnyq
