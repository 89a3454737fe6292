// SPDX-License-Identifier: Apache-2.0
//
// Compressive measurement model: S = M Psi Theta + N.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "subnyq/rng.hpp"
#include "subnyq/scene.hpp"

namespace subnyq {

enum class MatrixKind { fourier_select, gaussian };

std::string_view to_string(MatrixKind kind) noexcept;
MatrixKind matrix_kind_from_string(std::string_view name);

/// Everything needed to regenerate a measurement matrix bit-for-bit. Dense
/// entries are never persisted.
struct MeasurementSpec {
  std::uint64_t seed = 0;
  MatrixKind kind = MatrixKind::fourier_select;
  int rows = 0;
  int cols = 0;

  bool operator==(const MeasurementSpec&) const = default;
};

/// M x N compression operator. Fourier-select rows are DFT rows scaled by
/// 1/sqrt(M), so each row has squared norm N/M and M M^H = (N/M) I.
class MeasurementMatrix {
public:
  MeasurementMatrix(MatrixKind kind, CMatrix entries, std::vector<int> bins = {});

  static MeasurementMatrix generate(const MeasurementSpec& spec);
  /// Fourier-select matrix on explicit DFT bins (ascending order not required).
  static MeasurementMatrix from_bins(int n, std::span<const int> bins);

  int rows() const noexcept { return static_cast<int>(entries_.rows()); }
  int cols() const noexcept { return static_cast<int>(entries_.cols()); }
  MatrixKind kind() const noexcept { return kind_; }
  const CMatrix& entries() const noexcept { return entries_; }
  const std::vector<int>& selected_bins() const noexcept { return bins_; }
  /// Only set for matrices built through `generate`.
  const std::optional<MeasurementSpec>& spec() const noexcept { return spec_; }

  /// Keeps the listed rows unchanged (no renormalisation).
  MeasurementMatrix keep_rows(std::span<const int> row_indices) const;

  /// Compresses a contiguous run of Nyquist samples (e.g. a sparse atom).
  CVector apply_segment(Eigen::Index first, const CVector& values) const {
    return entries_.middleCols(first, values.size()) * values;
  }

private:
  MatrixKind kind_;
  CMatrix entries_;
  std::vector<int> bins_;
  std::optional<MeasurementSpec> spec_;
};

/// M distinct DFT bins drawn uniformly without replacement; rows in ascending
/// bin order. Throws Error(size) unless 2 <= M < N.
MeasurementMatrix make_fourier_selector(const RadarParams& params, int rows, Rng& rng);
/// I.i.d. circular Gaussian entries of variance 1/M.
MeasurementMatrix make_gaussian(const RadarParams& params, int rows, Rng& rng);
/// Seeds an Rng from `spec.seed` and dispatches on `spec.kind`.
MeasurementMatrix make_measurement(const RadarParams& params, const MeasurementSpec& spec);

struct NoiseSpec {
  double psd = 0.0;           // N_0, W/Hz
  double bandwidth_hz = 0.0;  // B

  double nyquist_variance() const { return psd * bandwidth_hz; }
  /// N N_0 B / M: per-entry variance after Fourier-select compression.
  double compressed_variance(int n, int m) const {
    return static_cast<double>(n) * psd * bandwidth_hz / m;
  }
};

/// M x L data matrix with its radar context.
struct DataMatrix {
  CMatrix entries;
  RadarParams params;
  double compression_ratio = 1.0;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// I.i.d. circular complex Gaussian samples of variance N_0 B.
NyquistVector nyquist_noise(const RadarParams& params, const NoiseSpec& noise, Rng& rng);

/// Exact matrix-vector product. Throws Error(size) on dimension mismatch.
CVector compress(const MeasurementMatrix& mm, const NyquistVector& x);
CMatrix compress(const MeasurementMatrix& mm, const CMatrix& x);

struct AssembledData {
  DataMatrix data;        // S
  DataMatrix true_noise;  // M [n^0 ... n^{L-1}]
};

/// Column l of S is compress(mm, echo_nyquist(scene, l) + nyquist_noise(...)),
/// with the L noise vectors drawn in pulse order from `rng`.
AssembledData assemble_data(const Scene& scene, const MeasurementMatrix& mm,
                            const NoiseSpec& noise, Rng& rng);

/// Pulse-averaged compressed signal energy (1/L) sum_l ||M r^l||^2.
double mean_pulse_energy(const Scene& scene, const MeasurementMatrix& mm);

/// N_0 giving the requested expected per-pulse compressed SNR. +inf dB maps to
/// N_0 = 0. Throws Error(domain) for a zero-energy scene.
double snr_to_psd(const Scene& scene, const MeasurementMatrix& mm, double target_snr_db);

}  // namespace subnyq
