// SPDX-License-Identifier: Apache-2.0
#include "subnyq/pipeline.hpp"

#include <chrono>

namespace subnyq {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

PipelineResult run_pipeline(const DataMatrix& s, const DelayDictionary& dict, int model_order,
                            const EstimatorSettings& settings) {
  PipelineResult out;
  const RadarParams& params = s.params;

  auto t0 = Clock::now();
  if (settings.use_mdl) {
    out.model_order = estimate_model_order(s);
  } else {
    out.model_order = settings.model_order > 0 ? settings.model_order : model_order;
  }
  out.doppler = estimate_doppler(s, out.model_order, settings.method);
  if (settings.noise_aware_stop) {
    const RVector& ev = out.doppler.eigenvalues;
    if (ev.size() > out.model_order) {
      out.noise_variance = std::max(0.0, ev.tail(ev.size() - out.model_order).mean());
    } else {
      out.noise_variance = estimate_noise_variance(s, out.model_order);
    }
  }
  out.dopplers_hz =
      merge_close(out.doppler.dopplers_hz, settings.merge_tol_cells * params.doppler_cell_hz());
  out.times.doppler_s = seconds_since(t0);

  t0 = Clock::now();
  out.doppler_matrix = build_doppler_matrix(out.dopplers_hz, params.num_pulses, params.pri_s);
  const std::vector<PerDopplerVector> split = pinv_decompose(s, out.doppler_matrix);
  out.times.decompose_s = seconds_since(t0);

  t0 = Clock::now();
  for (const auto& v : split) {
    const double group_noise = out.noise_variance > 0.0 && v.predicted_snr_gain > 0.0
                                   ? out.noise_variance / v.predicted_snr_gain
                                   : 0.0;
    out.groups.push_back(pursue_group(v, dict, settings.pursuit, group_noise));
  }
  out.times.pursuit_s = seconds_since(t0);

  out.estimates = flatten(out.groups);
  return out;
}

}  // namespace subnyq
