// SPDX-License-Identifier: Apache-2.0
#include "subnyq/doppler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "subnyq/error.hpp"

namespace subnyq {

namespace {

constexpr double kRankTol = 1e-10;

// Descending eigenpairs of a Hermitian matrix.
struct EigenPairs {
  RVector values;
  CMatrix vectors;
};

EigenPairs hermitian_eigen(const CMatrix& r) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
  const Eigen::Index n = r.rows();
  EigenPairs out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

// Total-least-squares ESPRIT on a covariance of a uniform array with unit
// spacing; returns spatial frequencies ascending.
DopplerEstimate esprit_on_covariance(const CMatrix& r, int order, double pri_s,
                                     DopplerMethod method) {
  const Eigen::Index n = r.rows();
  EigenPairs eig = hermitian_eigen(r);
  DopplerEstimate est;
  est.method = method;
  est.eigenvalues = eig.values;
  if (order == 0) return est;

  const double top = eig.values(0);
  if (!(top > 0.0) || eig.values(order - 1) <= kRankTol * top) {
    throw Error(ErrorKind::degenerate_subspace,
                "snapshot covariance has rank below the model order " + std::to_string(order) +
                    " (coherent Doppler groups?); use esprit-fb");
  }

  const CMatrix us = eig.vectors.leftCols(order);
  CMatrix c(n - 1, 2 * order);
  c << us.topRows(n - 1), us.bottomRows(n - 1);
  // Ascending eigenvectors of C^H C: the first `order` span the TLS noise part.
  Eigen::SelfAdjointEigenSolver<CMatrix> tls(c.adjoint() * c);
  const CMatrix e = tls.eigenvectors().leftCols(order);
  const CMatrix e12 = e.topRows(order);
  const CMatrix e22 = e.bottomRows(order);
  const CMatrix psi = -e12 * e22.partialPivLu().inverse();

  Eigen::ComplexEigenSolver<CMatrix> rot(psi, false);  // eigenvalues only
  std::vector<double> freqs;
  for (Eigen::Index k = 0; k < order; ++k) {
    freqs.push_back(std::arg(rot.eigenvalues()(k)) / (2.0 * kPi));
  }
  std::sort(freqs.begin(), freqs.end());
  est.spatial_freqs = freqs;
  for (double f : freqs) est.dopplers_hz.push_back(f / pri_s);
  return est;
}

void check_order(const DataMatrix& s, int order) {
  const int pulses = static_cast<int>(s.cols());
  if (order < 0 || order >= pulses) {
    throw Error(ErrorKind::size, "model order " + std::to_string(order) +
                                     " must lie in [0, L=" + std::to_string(pulses) + ")");
  }
}

}  // namespace

std::string_view to_string(DopplerMethod method) noexcept {
  switch (method) {
    case DopplerMethod::esprit: return "esprit";
    case DopplerMethod::esprit_fb: return "esprit-fb";
    case DopplerMethod::dft: return "dft";
  }
  return "unknown";
}

DopplerMethod doppler_method_from_string(std::string_view name) {
  if (name == "esprit") return DopplerMethod::esprit;
  if (name == "esprit-fb") return DopplerMethod::esprit_fb;
  if (name == "dft") return DopplerMethod::dft;
  throw Error(ErrorKind::config, "unknown Doppler method '" + std::string(name) + "'");
}

CMatrix snapshot_covariance(const DataMatrix& s) {
  const CMatrix x = s.entries.transpose();
  return (x * x.adjoint()) / static_cast<double>(s.rows());
}

DopplerEstimate esprit_doppler(const DataMatrix& s, int model_order) {
  check_order(s, model_order);
  return esprit_on_covariance(snapshot_covariance(s), model_order, s.params.pri_s,
                              DopplerMethod::esprit);
}

int default_subarray_len(int num_pulses) {
  return num_pulses - (num_pulses + 3) / 4;
}

DopplerEstimate esprit_fb_doppler(const DataMatrix& s, int model_order, int subarray_len) {
  check_order(s, model_order);
  const int pulses = static_cast<int>(s.cols());
  const int sub = subarray_len > 0 ? subarray_len : default_subarray_len(pulses);
  const int count = pulses - sub + 1;
  if (sub > pulses || sub <= model_order || 2 * count < model_order) {
    throw Error(ErrorKind::size, "subarray length " + std::to_string(sub) +
                                     " leaves too few subarrays for model order " +
                                     std::to_string(model_order));
  }
  const CMatrix r = snapshot_covariance(s);
  CMatrix rf = CMatrix::Zero(sub, sub);
  for (int q = 0; q < count; ++q) rf += r.block(q, q, sub, sub);
  rf /= static_cast<double>(count);
  // J conj(R) J with J the exchange matrix
  const CMatrix rb = rf.conjugate().reverse();
  const CMatrix rfb = 0.5 * (rf + rb);
  return esprit_on_covariance(rfb, model_order, s.params.pri_s, DopplerMethod::esprit_fb);
}

DopplerEstimate dft_doppler(const DataMatrix& s, int model_order) {
  check_order(s, model_order);
  const int pulses = static_cast<int>(s.cols());
  CMatrix dft(pulses, pulses);
  for (int l = 0; l < pulses; ++l) {
    for (int k = 0; k < pulses; ++k) {
      dft(l, k) = std::polar(1.0, -2.0 * kPi * static_cast<double>((l * k) % pulses) / pulses);
    }
  }
  const RVector spectrum = (s.entries * dft).cwiseAbs().colwise().sum().transpose();

  std::vector<int> peaks;
  for (int k = 0; k < pulses; ++k) {
    const double prev = spectrum((k + pulses - 1) % pulses);
    const double next = spectrum((k + 1) % pulses);
    if (spectrum(k) > prev && spectrum(k) >= next) peaks.push_back(k);
  }
  auto by_height = [&](int a, int b) {
    return spectrum(a) != spectrum(b) ? spectrum(a) > spectrum(b) : a < b;
  };
  std::sort(peaks.begin(), peaks.end(), by_height);
  if (static_cast<int>(peaks.size()) < model_order) {
    std::vector<int> rest;
    for (int k = 0; k < pulses; ++k) {
      if (std::find(peaks.begin(), peaks.end(), k) == peaks.end()) rest.push_back(k);
    }
    std::sort(rest.begin(), rest.end(), by_height);
    peaks.insert(peaks.end(), rest.begin(), rest.end());
  }
  peaks.resize(static_cast<std::size_t>(model_order));

  DopplerEstimate est;
  est.method = DopplerMethod::dft;
  for (int k : peaks) {
    const int signed_bin = k > pulses / 2 ? k - pulses : k;
    est.spatial_freqs.push_back(static_cast<double>(signed_bin) / pulses);
  }
  std::sort(est.spatial_freqs.begin(), est.spatial_freqs.end());
  for (double f : est.spatial_freqs) est.dopplers_hz.push_back(f / s.params.pri_s);
  return est;
}

DopplerEstimate estimate_doppler(const DataMatrix& s, int model_order, DopplerMethod method) {
  switch (method) {
    case DopplerMethod::esprit: return esprit_doppler(s, model_order);
    case DopplerMethod::esprit_fb: return esprit_fb_doppler(s, model_order);
    case DopplerMethod::dft: return dft_doppler(s, model_order);
  }
  throw Error(ErrorKind::config, "unknown Doppler method");
}

int estimate_model_order(const DataMatrix& s) {
  const int pulses = static_cast<int>(s.cols());
  if (pulses < 3) throw Error(ErrorKind::size, "model-order estimation needs L >= 3");
  RVector lambda = hermitian_eigen(snapshot_covariance(s)).values;
  const double top = lambda(0);
  if (!(top > 0.0)) return 0;
  const double floor = 1e-10 * top;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) lambda(k) = std::max(lambda(k), floor);

  const double snapshots = static_cast<double>(s.rows());
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= pulses - 2; ++k) {
    const auto tail = lambda.tail(pulses - k);
    const double p = static_cast<double>(pulses - k);
    const double log_geo = tail.array().log().sum() / p;
    const double log_arith = std::log(tail.sum() / p);
    const double score = -snapshots * p * (log_geo - log_arith) +
                         0.5 * k * (2.0 * pulses - k) * std::log(snapshots);
    if (score < best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

double estimate_noise_variance(const DataMatrix& s, int model_order) {
  check_order(s, model_order);
  const RVector lambda = hermitian_eigen(snapshot_covariance(s)).values;
  const Eigen::Index tail = lambda.size() - model_order;
  return std::max(0.0, lambda.tail(tail).mean());
}

std::vector<double> merge_close(std::vector<double> dopplers_hz, double tol_hz) {
  std::sort(dopplers_hz.begin(), dopplers_hz.end());
  std::vector<double> out;
  std::size_t i = 0;
  while (i < dopplers_hz.size()) {
    std::size_t j = i + 1;
    while (j < dopplers_hz.size() &&
           (dopplers_hz[j] - dopplers_hz[j - 1] < tol_hz || dopplers_hz[j] == dopplers_hz[j - 1])) {
      ++j;
    }
    const double sum = std::accumulate(dopplers_hz.begin() + static_cast<long>(i),
                                       dopplers_hz.begin() + static_cast<long>(j), 0.0);
    out.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

}  // namespace subnyq
