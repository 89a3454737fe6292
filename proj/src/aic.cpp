// SPDX-License-Identifier: Apache-2.0
#include "subnyq/aic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "subnyq/error.hpp"

namespace subnyq {

std::string_view to_string(MatrixKind kind) noexcept {
  return kind == MatrixKind::fourier_select ? "fourier-select" : "gaussian";
}

MatrixKind matrix_kind_from_string(std::string_view name) {
  if (name == "fourier-select" || name == "fourier") return MatrixKind::fourier_select;
  if (name == "gaussian") return MatrixKind::gaussian;
  throw Error(ErrorKind::config, "unknown measurement kind '" + std::string(name) + "'");
}

MeasurementMatrix::MeasurementMatrix(MatrixKind kind, CMatrix entries, std::vector<int> bins)
    : kind_(kind), entries_(std::move(entries)), bins_(std::move(bins)) {}

namespace {

void check_rows(int rows, int n) {
  if (rows < 2 || rows >= n) {
    throw Error(ErrorKind::size, "measurement rows M=" + std::to_string(rows) +
                                     " must satisfy 2 <= M < N=" + std::to_string(n));
  }
}

CMatrix fourier_rows(int n, std::span<const int> bins) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(bins.size()));
  CMatrix m(static_cast<Eigen::Index>(bins.size()), n);
  for (std::size_t r = 0; r < bins.size(); ++r) {
    for (int k = 0; k < n; ++k) {
      // reduce the phase index mod N before scaling to keep the argument small
      const auto idx = (static_cast<long long>(bins[r]) * k) % n;
      m(static_cast<Eigen::Index>(r), k) =
          std::polar(scale, -2.0 * kPi * static_cast<double>(idx) / n);
    }
  }
  return m;
}

MeasurementMatrix fourier_select(int n, int rows, Rng& rng) {
  check_rows(rows, n);
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> bins;
  bins.reserve(static_cast<std::size_t>(rows));
  std::sample(all.begin(), all.end(), std::back_inserter(bins), rows, rng);
  return MeasurementMatrix(MatrixKind::fourier_select, fourier_rows(n, bins), bins);
}

MeasurementMatrix gaussian(int n, int rows, Rng& rng) {
  check_rows(rows, n);
  std::normal_distribution<double> dist(0.0, std::sqrt(0.5 / rows));
  CMatrix m(rows, n);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double re = dist(rng);
      const double im = dist(rng);
      m(r, c) = {re, im};
    }
  }
  return MeasurementMatrix(MatrixKind::gaussian, std::move(m));
}

}  // namespace

MeasurementMatrix MeasurementMatrix::generate(const MeasurementSpec& spec) {
  Rng rng(spec.seed);
  MeasurementMatrix mm = spec.kind == MatrixKind::fourier_select
                             ? fourier_select(spec.cols, spec.rows, rng)
                             : gaussian(spec.cols, spec.rows, rng);
  mm.spec_ = spec;
  return mm;
}

MeasurementMatrix MeasurementMatrix::from_bins(int n, std::span<const int> bins) {
  check_rows(static_cast<int>(bins.size()), n);
  std::vector<int> sorted(bins.begin(), bins.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorKind::size, "duplicate DFT bins");
  }
  if (sorted.front() < 0 || sorted.back() >= n) {
    throw Error(ErrorKind::size, "DFT bin out of range");
  }
  std::vector<int> kept(bins.begin(), bins.end());
  return MeasurementMatrix(MatrixKind::fourier_select, fourier_rows(n, kept), kept);
}

MeasurementMatrix MeasurementMatrix::keep_rows(std::span<const int> row_indices) const {
  CMatrix sub(static_cast<Eigen::Index>(row_indices.size()), entries_.cols());
  std::vector<int> bins;
  for (std::size_t r = 0; r < row_indices.size(); ++r) {
    const int idx = row_indices[r];
    if (idx < 0 || idx >= rows()) throw Error(ErrorKind::size, "row index out of range");
    sub.row(static_cast<Eigen::Index>(r)) = entries_.row(idx);
    if (!bins_.empty()) bins.push_back(bins_[static_cast<std::size_t>(idx)]);
  }
  return MeasurementMatrix(kind_, std::move(sub), std::move(bins));
}

MeasurementMatrix make_fourier_selector(const RadarParams& params, int rows, Rng& rng) {
  return fourier_select(params.nyq_count(), rows, rng);
}

MeasurementMatrix make_gaussian(const RadarParams& params, int rows, Rng& rng) {
  return gaussian(params.nyq_count(), rows, rng);
}

MeasurementMatrix make_measurement(const RadarParams& params, const MeasurementSpec& spec) {
  if (spec.cols != params.nyq_count()) {
    throw Error(ErrorKind::size, "measurement spec column count does not match N");
  }
  return MeasurementMatrix::generate(spec);
}

NyquistVector nyquist_noise(const RadarParams& params, const NoiseSpec& noise, Rng& rng) {
  if (noise.psd < 0.0) throw Error(ErrorKind::domain, "negative noise PSD");
  const Eigen::Index n = params.nyq_count();
  if (noise.psd == 0.0) return NyquistVector::Zero(n);
  std::normal_distribution<double> dist(0.0, std::sqrt(0.5 * noise.nyquist_variance()));
  NyquistVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = dist(rng);
    const double im = dist(rng);
    v(k) = {re, im};
  }
  return v;
}

CVector compress(const MeasurementMatrix& mm, const NyquistVector& x) {
  if (x.size() != mm.cols()) {
    throw Error(ErrorKind::size, "compress: vector length " + std::to_string(x.size()) +
                                     " != N=" + std::to_string(mm.cols()));
  }
  return mm.entries() * x;
}

CMatrix compress(const MeasurementMatrix& mm, const CMatrix& x) {
  if (x.rows() != mm.cols()) {
    throw Error(ErrorKind::size, "compress: matrix rows do not match N");
  }
  return mm.entries() * x;
}

AssembledData assemble_data(const Scene& scene, const MeasurementMatrix& mm,
                            const NoiseSpec& noise, Rng& rng) {
  const auto& params = scene.params();
  if (mm.cols() != params.nyq_count()) {
    throw Error(ErrorKind::size, "measurement matrix does not match N");
  }
  const int pulses = params.num_pulses;
  CMatrix noise_nyq(params.nyq_count(), pulses);
  for (int l = 0; l < pulses; ++l) noise_nyq.col(l) = nyquist_noise(params, noise, rng);

  const double ratio = static_cast<double>(mm.cols()) / mm.rows();
  CMatrix compressed_noise = mm.entries() * noise_nyq;
  CMatrix s = mm.entries() * echo_matrix(scene) + compressed_noise;
  return {DataMatrix{std::move(s), params, ratio},
          DataMatrix{std::move(compressed_noise), params, ratio}};
}

double mean_pulse_energy(const Scene& scene, const MeasurementMatrix& mm) {
  if (scene.empty()) return 0.0;
  const CMatrix clean = mm.entries() * echo_matrix(scene);
  return clean.squaredNorm() / clean.cols();
}

double snr_to_psd(const Scene& scene, const MeasurementMatrix& mm, double target_snr_db) {
  if (std::isinf(target_snr_db) && target_snr_db > 0) return 0.0;
  const double energy = mean_pulse_energy(scene, mm);
  if (!(energy > 0.0)) throw Error(ErrorKind::domain, "scene has zero signal energy");
  // E||M n||^2 = ||M||_F^2 N_0 B, which is N N_0 B for the Fourier-select kind.
  const double snr = std::pow(10.0, target_snr_db / 10.0);
  return energy / (snr * mm.entries().squaredNorm() * scene.params().bandwidth_hz);
}

}  // namespace subnyq
