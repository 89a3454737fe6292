// SPDX-License-Identifier: Apache-2.0
//
// Sequential estimator for one CPI: Doppler first, then one delay/gain
// pursuit per estimated Doppler.
#pragma once

#include <vector>

#include "subnyq/delays.hpp"
#include "subnyq/doppler.hpp"
#include "subnyq/eval.hpp"

namespace subnyq {

struct EstimatorSettings {
  DopplerMethod method = DopplerMethod::esprit_fb;
  /// > 0 fixes the Doppler model order; 0 means "use the caller's value";
  /// `use_mdl` overrides both.
  int model_order = 0;
  bool use_mdl = false;
  double merge_tol_cells = 0.1;  // Doppler cells
  /// Feed the covariance noise-floor estimate into the pursuit stop rule.
  bool noise_aware_stop = true;
  PursuitConfig pursuit;
};

struct StageTimes {
  double doppler_s = 0.0;
  double decompose_s = 0.0;
  double pursuit_s = 0.0;

  double stage2_s() const { return decompose_s + pursuit_s; }
  double total_s() const { return doppler_s + decompose_s + pursuit_s; }
};

struct PipelineResult {
  int model_order = 0;
  DopplerEstimate doppler;
  std::vector<double> dopplers_hz;  // after merging
  double noise_variance = 0.0;      // covariance noise-floor estimate
  DopplerMatrix doppler_matrix;
  std::vector<GroupEstimate> groups;
  std::vector<TargetEstimate> estimates;  // all groups flattened
  StageTimes times;
};

/// `model_order` is used when the settings do not fix one.
PipelineResult run_pipeline(const DataMatrix& s, const DelayDictionary& dict, int model_order,
                            const EstimatorSettings& settings);

}  // namespace subnyq
