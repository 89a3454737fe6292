// SPDX-License-Identifier: Apache-2.0
#include "subnyq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "subnyq/error.hpp"

namespace subnyq {

using nlohmann::json;

int ExperimentConfig::measurement_rows() const {
  return static_cast<int>(std::lround(radar.nyq_count() / compression_ratio));
}

void ExperimentConfig::validate() const {
  radar.validate();
  if (!(compression_ratio > 1.0)) throw Error(ErrorKind::config, "compression_ratio must exceed 1");
  const int m = measurement_rows();
  if (m < 2 || m >= radar.nyq_count()) {
    throw Error(ErrorKind::config, "compression ratio gives M outside [2, N)");
  }
  if (trials < 1) throw Error(ErrorKind::config, "trials must be at least 1");
  if (snr_db.empty()) throw Error(ErrorKind::config, "snr_db list is empty");
  if (threads < 1) throw Error(ErrorKind::config, "threads must be at least 1");
  if (timing_trials < 1) throw Error(ErrorKind::config, "timing_trials must be at least 1");
  if (timing_doppler_groups < 0) {
    throw Error(ErrorKind::config, "timing_doppler_groups must be non-negative");
  }
  if (scene.num_targets < 0 || scene.num_doppler_groups < 0) {
    throw Error(ErrorKind::config, "target and group counts must be non-negative");
  }
  if (scene.min_delay_sep_cells < 0 || scene.min_doppler_sep_cells < 0) {
    throw Error(ErrorKind::config, "separations must be non-negative");
  }
  if (!(scene.gain_min > 0.0 && scene.gain_min <= scene.gain_max)) {
    throw Error(ErrorKind::config, "gain range must satisfy 0 < gain_min <= gain_max");
  }
  estimator.pursuit.validate();
}

void apply_profile(ExperimentConfig& cfg, const std::string& profile) {
  if (profile == "desk") {
    cfg.radar = RadarParams::desk();
  } else if (profile == "paper") {
    cfg.radar = RadarParams::paper();
  } else {
    throw Error(ErrorKind::config, "unknown profile '" + profile + "' (expected desk|paper)");
  }
  cfg.profile = profile;
}

namespace {

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::config, std::string(where) + " must be an object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw Error(ErrorKind::config, "unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad value for '") + key + "': " + e.what());
  }
}

double snr_from_json(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "noiseless") return std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::config, "bad SNR value '" + s + "'");
  }
  return v.get<double>();
}

json snr_to_json(double snr) {
  return std::isinf(snr) ? json("inf") : json(snr);
}

json number(double v) {
  if (std::isnan(v)) return json("nan");
  if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
  return json(v);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, std::string("config parse error: ") + e.what());
  }
  check_keys(j, "config",
             {"profile", "radar", "compression_ratio", "matrix_kind", "scene", "fixed_scene",
              "estimator", "snr_db", "trials", "seed", "compute_crb", "threads", "timing_k",
              "timing_trials", "timing_snr_db", "timing_doppler_groups", "output", "record_timing"});
  ExperimentConfig cfg;
  if (j.contains("profile")) {
    const auto name = j.at("profile").get<std::string>();
    if (name == "custom") {
      cfg.profile = name;
    } else {
      apply_profile(cfg, name);
    }
  }
  if (j.contains("radar")) {
    const json& r = j.at("radar");
    check_keys(r, "radar", {"bandwidth_hz", "pulse_width_s", "pri_s", "num_pulses"});
    read(r, "bandwidth_hz", cfg.radar.bandwidth_hz);
    read(r, "pulse_width_s", cfg.radar.pulse_width_s);
    read(r, "pri_s", cfg.radar.pri_s);
    read(r, "num_pulses", cfg.radar.num_pulses);
    ExperimentConfig named;
    if (cfg.profile != "custom") apply_profile(named, cfg.profile);
    const RadarParams& n = named.radar;
    const RadarParams& g = cfg.radar;
    if (cfg.profile == "custom" || g.bandwidth_hz != n.bandwidth_hz || g.pulse_width_s != n.pulse_width_s ||
        g.pri_s != n.pri_s || g.num_pulses != n.num_pulses) {
      cfg.profile = "custom";
    }
  }
  read(j, "compression_ratio", cfg.compression_ratio);
  if (j.contains("matrix_kind")) cfg.matrix_kind = matrix_kind_from_string(j.at("matrix_kind").get<std::string>());
  if (j.contains("scene")) {
    const json& s = j.at("scene");
    check_keys(s, "scene",
               {"targets", "num_targets", "num_doppler_groups", "delay_min_s", "delay_max_s",
                "doppler_min_hz", "doppler_max_hz", "gain_min", "gain_max", "min_delay_sep_cells",
                "min_doppler_sep_cells", "max_attempts"});
    if (s.contains("targets")) {
      for (const json& t : s.at("targets")) {
        check_keys(t, "target", {"delay_s", "doppler_hz", "gain_re", "gain_im"});
        Target tg;
        double re = 1.0;
        double im = 0.0;
        read(t, "delay_s", tg.delay_s);
        read(t, "doppler_hz", tg.doppler_hz);
        read(t, "gain_re", re);
        read(t, "gain_im", im);
        tg.gain = {re, im};
        cfg.scene.targets.push_back(tg);
      }
    }
    read(s, "num_targets", cfg.scene.num_targets);
    read(s, "num_doppler_groups", cfg.scene.num_doppler_groups);
    read(s, "delay_min_s", cfg.scene.delay_min_s);
    read(s, "delay_max_s", cfg.scene.delay_max_s);
    read(s, "doppler_min_hz", cfg.scene.doppler_min_hz);
    read(s, "doppler_max_hz", cfg.scene.doppler_max_hz);
    read(s, "gain_min", cfg.scene.gain_min);
    read(s, "gain_max", cfg.scene.gain_max);
    read(s, "min_delay_sep_cells", cfg.scene.min_delay_sep_cells);
    read(s, "min_doppler_sep_cells", cfg.scene.min_doppler_sep_cells);
    read(s, "max_attempts", cfg.scene.max_attempts);
  }
  read(j, "fixed_scene", cfg.fixed_scene);
  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    check_keys(e, "estimator",
               {"method", "model_order", "use_mdl", "merge_tol_cells", "noise_aware_stop", "pursuit"});
    if (e.contains("method")) cfg.estimator.method = doppler_method_from_string(e.at("method").get<std::string>());
    read(e, "model_order", cfg.estimator.model_order);
    read(e, "use_mdl", cfg.estimator.use_mdl);
    read(e, "merge_tol_cells", cfg.estimator.merge_tol_cells);
    read(e, "noise_aware_stop", cfg.estimator.noise_aware_stop);
    if (e.contains("pursuit")) {
      const json& p = e.at("pursuit");
      check_keys(p, "pursuit",
                 {"max_atoms", "residual_stop_ratio", "refine_max_iters", "refine_step_tol",
                  "grid_spacing_cells", "noise_stop_sigmas", "condition_cap"});
      auto& pc = cfg.estimator.pursuit;
      read(p, "max_atoms", pc.max_atoms);
      read(p, "residual_stop_ratio", pc.residual_stop_ratio);
      read(p, "refine_max_iters", pc.refine_max_iters);
      read(p, "refine_step_tol", pc.refine_step_tol);
      read(p, "grid_spacing_cells", pc.grid_spacing_cells);
      read(p, "noise_stop_sigmas", pc.noise_stop_sigmas);
      read(p, "condition_cap", pc.condition_cap);
    }
  }
  if (j.contains("snr_db")) {
    cfg.snr_db.clear();
    for (const json& v : j.at("snr_db")) cfg.snr_db.push_back(snr_from_json(v));
  }
  read(j, "trials", cfg.trials);
  read(j, "seed", cfg.seed);
  read(j, "compute_crb", cfg.compute_crb);
  read(j, "threads", cfg.threads);
  read(j, "timing_k", cfg.timing_k);
  read(j, "timing_trials", cfg.timing_trials);
  read(j, "timing_snr_db", cfg.timing_snr_db);
  read(j, "timing_doppler_groups", cfg.timing_doppler_groups);
  read(j, "output", cfg.output);
  read(j, "record_timing", cfg.record_timing);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["profile"] = cfg.profile;
  j["radar"] = {{"bandwidth_hz", cfg.radar.bandwidth_hz},
                {"pulse_width_s", cfg.radar.pulse_width_s},
                {"pri_s", cfg.radar.pri_s},
                {"num_pulses", cfg.radar.num_pulses}};
  j["compression_ratio"] = cfg.compression_ratio;
  j["matrix_kind"] = std::string(to_string(cfg.matrix_kind));
  json targets = json::array();
  for (const auto& t : cfg.scene.targets) {
    targets.push_back({{"delay_s", t.delay_s},
                       {"doppler_hz", t.doppler_hz},
                       {"gain_re", t.gain.real()},
                       {"gain_im", t.gain.imag()}});
  }
  const auto& s = cfg.scene;
  j["scene"] = {{"targets", targets},
                {"num_targets", s.num_targets},
                {"num_doppler_groups", s.num_doppler_groups},
                {"delay_min_s", s.delay_min_s},
                {"delay_max_s", s.delay_max_s},
                {"doppler_min_hz", s.doppler_min_hz},
                {"doppler_max_hz", s.doppler_max_hz},
                {"gain_min", s.gain_min},
                {"gain_max", s.gain_max},
                {"min_delay_sep_cells", s.min_delay_sep_cells},
                {"min_doppler_sep_cells", s.min_doppler_sep_cells},
                {"max_attempts", s.max_attempts}};
  j["fixed_scene"] = cfg.fixed_scene;
  const auto& p = cfg.estimator.pursuit;
  j["estimator"] = {{"method", std::string(to_string(cfg.estimator.method))},
                    {"model_order", cfg.estimator.model_order},
                    {"use_mdl", cfg.estimator.use_mdl},
                    {"merge_tol_cells", cfg.estimator.merge_tol_cells},
                    {"noise_aware_stop", cfg.estimator.noise_aware_stop},
                    {"pursuit",
                     {{"max_atoms", p.max_atoms},
                      {"residual_stop_ratio", p.residual_stop_ratio},
                      {"refine_max_iters", p.refine_max_iters},
                      {"refine_step_tol", p.refine_step_tol},
                      {"grid_spacing_cells", p.grid_spacing_cells},
                      {"noise_stop_sigmas", p.noise_stop_sigmas},
                      {"condition_cap", p.condition_cap}}}};
  json snrs = json::array();
  for (double v : cfg.snr_db) snrs.push_back(snr_to_json(v));
  j["snr_db"] = snrs;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["compute_crb"] = cfg.compute_crb;
  j["threads"] = cfg.threads;
  j["timing_k"] = cfg.timing_k;
  j["timing_trials"] = cfg.timing_trials;
  j["timing_snr_db"] = cfg.timing_snr_db;
  j["timing_doppler_groups"] = cfg.timing_doppler_groups;
  j["output"] = cfg.output;
  j["record_timing"] = cfg.record_timing;
  return j.dump(2);
}

Scene random_scene(const RadarParams& params, const SceneSpec& spec, Rng& rng) {
  params.validate();
  const int k = spec.num_targets;
  const int groups = spec.num_doppler_groups > 0 ? std::min(spec.num_doppler_groups, k) : k;
  if (spec.delay_min_s < 0.0 || spec.delay_max_s > params.max_delay_s() ||
      spec.delay_min_s >= spec.delay_max_s) {
    throw Error(ErrorKind::config, "scene delay interval must lie inside [0, T - T_p)");
  }
  if (spec.doppler_min_hz < -params.max_doppler_hz() || spec.doppler_max_hz > params.max_doppler_hz() ||
      spec.doppler_min_hz >= spec.doppler_max_hz) {
    throw Error(ErrorKind::config, "scene Doppler interval must lie inside [-1/2T, 1/2T]");
  }
  const double tau_sep = spec.min_delay_sep_cells * params.delay_cell_s();
  const double nu_sep = spec.min_doppler_sep_cells * params.doppler_cell_hz();

  std::uniform_real_distribution<double> delay_dist(spec.delay_min_s, spec.delay_max_s);
  std::uniform_real_distribution<double> doppler_dist(spec.doppler_min_hz, spec.doppler_max_hz);
  std::uniform_real_distribution<double> gain_dist(spec.gain_min, spec.gain_max);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);

  int attempts = 0;
  // Draws outside (-limit, limit) are rejected like separation failures.
  auto draw_separated = [&](std::vector<double>& accepted, auto& dist, double sep, double limit) {
    for (;;) {
      if (++attempts > spec.max_attempts) {
        throw Error(ErrorKind::infeasible, "scene separation constraints not met after " +
                                               std::to_string(spec.max_attempts) + " draws");
      }
      const double v = dist(rng);
      if (std::abs(v) >= limit) continue;
      const bool ok = std::all_of(accepted.begin(), accepted.end(),
                                  [&](double a) { return std::abs(a - v) >= sep; });
      if (ok) {
        accepted.push_back(v);
        return;
      }
    }
  };

  std::vector<double> dopplers;
  for (int g = 0; g < groups; ++g) draw_separated(dopplers, doppler_dist, nu_sep, params.max_doppler_hz());
  std::vector<double> delays;
  for (int t = 0; t < k; ++t) draw_separated(delays, delay_dist, tau_sep, params.max_delay_s());

  std::vector<Target> targets;
  for (int t = 0; t < k; ++t) {
    const double mag = gain_dist(rng);
    const double phase = 2.0 * kPi - phase_dist(rng);  // (0, 2 pi]
    targets.push_back({delays[static_cast<std::size_t>(t)],
                       dopplers[static_cast<std::size_t>(t % groups)], std::polar(mag, phase)});
  }
  return Scene(params, std::move(targets));
}

ExperimentContext ExperimentContext::build(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentContext ctx;
  const MeasurementSpec spec{derive_seed(cfg.seed, "measurement"), cfg.matrix_kind,
                             cfg.measurement_rows(), cfg.radar.nyq_count()};
  ctx.measurement = std::make_shared<const MeasurementMatrix>(make_measurement(cfg.radar, spec));
  ctx.dictionary = std::make_shared<const DelayDictionary>(
      ctx.measurement, cfg.radar,
      cfg.estimator.pursuit.grid_spacing_cells * cfg.radar.delay_cell_s());
  return ctx;
}

namespace {

Scene trial_scene(const ExperimentConfig& cfg, int trial) {
  if (!cfg.scene.targets.empty()) return Scene(cfg.radar, cfg.scene.targets);
  Rng rng = make_stream(cfg.seed, "scene", cfg.fixed_scene ? 0 : static_cast<std::uint64_t>(trial));
  return random_scene(cfg.radar, cfg.scene, rng);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

template <typename F>
void parallel_for(std::size_t count, int threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  for (std::size_t w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                      std::size_t snr_index, int trial) {
  TrialRecord rec;
  rec.trial = trial;
  rec.snr_db = cfg.snr_db.at(snr_index);
  rec.seed = derive_seed(cfg.seed, "noise", snr_index, static_cast<std::uint64_t>(trial));
  try {
    const Scene scene = trial_scene(cfg, trial);
    rec.truth = scene.targets();
    const MeasurementMatrix& mm = *ctx.measurement;
    const double psd = snr_to_psd(scene, mm, rec.snr_db);
    const NoiseSpec noise{psd, cfg.radar.bandwidth_hz};
    Rng rng(rec.seed);
    const AssembledData data = assemble_data(scene, mm, noise, rng);

    const PipelineResult res =
        run_pipeline(data.data, *ctx.dictionary, static_cast<int>(scene.num_groups()), cfg.estimator);
    rec.times = res.times;
    for (const auto& g : res.groups) rec.snr_gains.push_back(g.predicted_snr_gain);

    const TopK top = select_top_k(res.estimates, static_cast<int>(scene.num_targets()));
    rec.shortfall = top.shortfall;
    rec.estimates = top.selected;
    const CellSizes cells = CellSizes::of(cfg.radar);
    const MatchResult match = match_targets(scene.targets(), top.selected, cells);
    rec.matched = static_cast<int>(match.pairs.size());
    rec.unmatched_truth = static_cast<int>(match.unmatched_truth.size());
    rec.unmatched_estimates = static_cast<int>(match.unmatched_estimates.size());
    rec.rrmse = rrmse(match, cells);

    if (cfg.compute_crb && psd > 0.0) {
      const double sigma2 = mm.entries().squaredNorm() / mm.rows() * noise.nyquist_variance();
      const CrbReport bound = crb(scene, mm, sigma2);
      rec.crb_tau_s2 = bound.tau_s2;
      rec.crb_nu_hz2 = bound.nu_hz2;
      rec.crb_tau_cells = std::sqrt(mean_of(bound.tau_s2)) / cells.delay_s;
      rec.crb_nu_cells = std::sqrt(mean_of(bound.nu_hz2)) / cells.doppler_hz;
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.failure = std::string(to_string(e.kind()));
  } catch (const std::exception&) {
    rec.ok = false;
    rec.failure = "internal";
  }
  return rec;
}

std::vector<SweepRow> aggregate(const std::vector<TrialRecord>& records) {
  struct Acc {
    double tau2 = 0, nu2 = 0, crb_tau2 = 0, crb_nu2 = 0;
    int ok = 0;
  };
  std::map<double, Acc> by_snr;
  for (const auto& r : records) {
    Acc& a = by_snr[r.snr_db];
    if (!r.ok) continue;
    a.tau2 += r.rrmse.tau * r.rrmse.tau;
    a.nu2 += r.rrmse.nu * r.rrmse.nu;
    a.crb_tau2 += r.crb_tau_cells * r.crb_tau_cells;
    a.crb_nu2 += r.crb_nu_cells * r.crb_nu_cells;
    ++a.ok;
  }
  std::vector<SweepRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [snr, a] : by_snr) {
    SweepRow row;
    row.snr_db = snr;
    row.trials_ok = a.ok;
    row.rrmse_tau = a.ok ? std::sqrt(a.tau2 / a.ok) : nan;
    row.rrmse_nu = a.ok ? std::sqrt(a.nu2 / a.ok) : nan;
    row.crb_tau = a.ok ? std::sqrt(a.crb_tau2 / a.ok) : nan;
    row.crb_nu = a.ok ? std::sqrt(a.crb_nu2 / a.ok) : nan;
    rows.push_back(row);
  }
  return rows;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  return run_sweep(cfg, ExperimentContext::build(cfg));
}

SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  cfg.validate();
  SweepResult out;
  const std::size_t per_snr = static_cast<std::size_t>(cfg.trials);
  out.records.resize(cfg.snr_db.size() * per_snr);
  parallel_for(out.records.size(), cfg.threads, [&](std::size_t idx) {
    out.records[idx] = run_trial(cfg, ctx, idx / per_snr, static_cast<int>(idx % per_snr));
  });
  out.rows = aggregate(out.records);
  return out;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

json trial_json(const TrialRecord& r, bool include_timing) {
  json j;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["snr_db"] = snr_to_json(r.snr_db);
  j["ok"] = r.ok;
  if (!r.ok) {
    j["failure"] = r.failure;
    return j;
  }
  j["rrmse_tau"] = number(r.rrmse.tau);
  j["rrmse_nu"] = number(r.rrmse.nu);
  j["matched"] = r.matched;
  j["unmatched_truth"] = r.unmatched_truth;
  j["unmatched_estimates"] = r.unmatched_estimates;
  j["shortfall"] = r.shortfall;
  j["snr_gains"] = r.snr_gains;
  json crb_tau = json::array();
  json crb_nu = json::array();
  for (double v : r.crb_tau_s2) crb_tau.push_back(number(v));
  for (double v : r.crb_nu_hz2) crb_nu.push_back(number(v));
  j["crb_tau_s2"] = crb_tau;
  j["crb_nu_hz2"] = crb_nu;
  json truth = json::array();
  for (const auto& t : r.truth) {
    truth.push_back({{"delay_s", t.delay_s}, {"doppler_hz", t.doppler_hz},
                     {"gain_re", t.gain.real()}, {"gain_im", t.gain.imag()}});
  }
  json est = json::array();
  for (const auto& e : r.estimates) {
    est.push_back({{"delay_s", e.delay_s}, {"doppler_hz", e.doppler_hz},
                   {"gain_re", e.gain.real()}, {"gain_im", e.gain.imag()}});
  }
  j["truth"] = truth;
  j["estimates"] = est;
  if (include_timing) {
    j["time_doppler_s"] = r.times.doppler_s;
    j["time_decompose_s"] = r.times.decompose_s;
    j["time_pursuit_s"] = r.times.pursuit_s;
  }
  return j;
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "snr_db,rrmse_tau,rrmse_nu,crb_tau,crb_nu,trials_ok\n";
  for (const auto& r : rows) {
    os << fmt(r.snr_db) << ',' << fmt(r.rrmse_tau) << ',' << fmt(r.rrmse_nu) << ','
       << fmt(r.crb_tau) << ',' << fmt(r.crb_nu) << ',' << r.trials_ok << '\n';
  }
}

std::string trial_to_json(const TrialRecord& record, bool include_timing) {
  return trial_json(record, include_timing).dump(2);
}

std::string records_to_json(const std::vector<TrialRecord>& records, bool include_timing) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(trial_json(r, include_timing));
  return arr.dump(2);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

std::vector<TimingRow> run_timing(const ExperimentConfig& cfg, const std::vector<int>& k_list) {
  if (!std::is_sorted(k_list.begin(), k_list.end())) {
    throw Error(ErrorKind::config, "timing K list must be ascending");
  }
  const ExperimentContext ctx = ExperimentContext::build(cfg);
  std::vector<TimingRow> rows;
  for (int k : k_list) {
    SceneSpec spec = cfg.scene;
    spec.targets.clear();
    spec.num_targets = k;
    spec.num_doppler_groups = cfg.timing_doppler_groups > 0 ? std::min(k, cfg.timing_doppler_groups) : 0;
    // the per-group atom cap must cover the targets sharing a group
    EstimatorSettings est = cfg.estimator;
    if (spec.num_doppler_groups > 0) {
      const int per_group = (k + spec.num_doppler_groups - 1) / spec.num_doppler_groups;
      est.pursuit.max_atoms = std::max(est.pursuit.max_atoms, per_group);
    }
    std::vector<double> dop, dec, pur, st2, tot;
    for (int t = 0; t <= cfg.timing_trials; ++t) {
      Rng scene_rng = make_stream(cfg.seed, "timing-scene", static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>(t));
      const Scene scene = random_scene(cfg.radar, spec, scene_rng);
      const NoiseSpec noise{snr_to_psd(scene, *ctx.measurement, cfg.timing_snr_db), cfg.radar.bandwidth_hz};
      Rng noise_rng = make_stream(cfg.seed, "timing-noise", static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>(t));
      const AssembledData data = assemble_data(scene, *ctx.measurement, noise, noise_rng);
      PipelineResult res;
      try {
        res = run_pipeline(data.data, *ctx.dictionary, static_cast<int>(scene.num_groups()), est);
      } catch (const Error&) {
        continue;
      }
      if (t == 0) continue;  // warm-up
      dop.push_back(res.times.doppler_s);
      dec.push_back(res.times.decompose_s);
      pur.push_back(res.times.pursuit_s);
      st2.push_back(res.times.stage2_s());
      tot.push_back(res.times.total_s());
    }
    rows.push_back({k, median(dop), median(dec), median(pur), median(st2), median(tot)});
  }
  return rows;
}

void write_timing_csv(std::ostream& os, const std::vector<TimingRow>& rows) {
  os << "k,doppler_s,decompose_s,pursuit_s,stage2_s,total_s\n";
  for (const auto& r : rows) {
    os << r.k << ',' << fmt(r.doppler_s) << ',' << fmt(r.decompose_s) << ',' << fmt(r.pursuit_s)
       << ',' << fmt(r.stage2_s) << ',' << fmt(r.total_s) << '\n';
  }
}

}  // namespace subnyq
