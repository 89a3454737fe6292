// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: configuration, seeded scenario generation, Monte-Carlo
// SNR sweeps, runtime-vs-K timing and result export.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "subnyq/pipeline.hpp"

namespace subnyq {

struct SceneSpec {
  /// Explicit targets; when non-empty every trial uses exactly these.
  std::vector<Target> targets;
  int num_targets = 10;
  /// 0 gives every target its own Doppler shift; otherwise targets are dealt
  /// round-robin into this many groups.
  int num_doppler_groups = 0;
  double delay_min_s = 0.0;
  double delay_max_s = 10e-6;
  double doppler_min_hz = -5e3;
  double doppler_max_hz = 5e3;
  double gain_min = 0.1;
  double gain_max = 1.0;
  double min_delay_sep_cells = 2.0;
  double min_doppler_sep_cells = 2.0;
  int max_attempts = 100000;
};

struct ExperimentConfig {
  std::string profile = "desk";
  RadarParams radar = RadarParams::desk();
  double compression_ratio = 5.0;  // N / M
  MatrixKind matrix_kind = MatrixKind::fourier_select;
  SceneSpec scene;
  /// Draw one scene and reuse it for every trial.
  bool fixed_scene = false;
  EstimatorSettings estimator;
  std::vector<double> snr_db{-20.0, -10.0, 0.0, 10.0, 20.0};  // +inf: noiseless
  int trials = 20;
  std::uint64_t seed = 1;
  bool compute_crb = true;
  int threads = 1;
  std::vector<int> timing_k{2, 4, 8, 16};
  int timing_trials = 10;
  /// Doppler groups per timing scene, capped at K; 0 gives one group per target.
  int timing_doppler_groups = 2;
  double timing_snr_db = 20.0;
  std::string output;  // path prefix; empty writes to stdout
  /// Per-trial JSON carries wall-clock times only when set (they break
  /// byte-identical reruns).
  bool record_timing = false;

  int measurement_rows() const;
  void validate() const;
};

/// Applies a named profile ("desk" or "paper") to the radar parameters.
void apply_profile(ExperimentConfig& cfg, const std::string& profile);

/// Parses the JSON config text (comments allowed). Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// Uniform delays/Dopplers/gain magnitudes, phases in (0, 2 pi], rejection
/// until all pairwise separations hold. Throws Error(infeasible) after
/// `max_attempts` rejected draws.
Scene random_scene(const RadarParams& params, const SceneSpec& spec, Rng& rng);

/// Measurement matrix and delay dictionary shared by all trials of a run.
struct ExperimentContext {
  std::shared_ptr<const MeasurementMatrix> measurement;
  std::shared_ptr<const DelayDictionary> dictionary;

  static ExperimentContext build(const ExperimentConfig& cfg);
};

struct TrialRecord {
  std::uint64_t seed = 0;  // noise stream seed
  double snr_db = 0.0;
  int trial = 0;
  bool ok = false;
  std::string failure;  // error kind tag when !ok
  StageTimes times;
  Rrmse rrmse;
  int matched = 0;
  int unmatched_truth = 0;
  int unmatched_estimates = 0;
  bool shortfall = false;
  std::vector<double> snr_gains;
  std::vector<double> crb_tau_s2;
  std::vector<double> crb_nu_hz2;
  /// CRB as an RRMSE-equivalent: sqrt(mean CRB) / cell.
  double crb_tau_cells = 0.0;
  double crb_nu_cells = 0.0;
  std::vector<Target> truth;
  std::vector<TargetEstimate> estimates;  // the top-K selection
};

/// One full trial: scene, noise, pipeline, metrics. Never throws for
/// estimator failures; they are recorded with a tag.
TrialRecord run_trial(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                      std::size_t snr_index, int trial);

struct SweepRow {
  double snr_db = 0.0;
  double rrmse_tau = 0.0;  // RMS over successful trials
  double rrmse_nu = 0.0;
  double crb_tau = 0.0;
  double crb_nu = 0.0;
  int trials_ok = 0;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // SNR-major, trial-minor
  std::vector<SweepRow> rows;        // ascending SNR
};

SweepResult run_sweep(const ExperimentConfig& cfg);
SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentContext& ctx);
std::vector<SweepRow> aggregate(const std::vector<TrialRecord>& records);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::string records_to_json(const std::vector<TrialRecord>& records, bool include_timing);
std::string trial_to_json(const TrialRecord& record, bool include_timing);

struct TimingRow {
  int k = 0;
  double doppler_s = 0.0;  // medians over trials
  double decompose_s = 0.0;
  double pursuit_s = 0.0;
  double stage2_s = 0.0;
  double total_s = 0.0;
};

/// Median stage times per K at fixed (M, N, L); one warm-up trial per K is
/// discarded.
std::vector<TimingRow> run_timing(const ExperimentConfig& cfg, const std::vector<int>& k_list);
void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows);

double median(std::vector<double> values);

}  // namespace subnyq
