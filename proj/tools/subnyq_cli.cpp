// SPDX-License-Identifier: Apache-2.0
//
// subnyq: experiment runner for the sub-Nyquist delay-Doppler estimator.
//
//   subnyq sweep  [--config f] [--seed s] [--out prefix.csv] ...
//   subnyq timing [--config f] ...
//   subnyq single [--config f] ...
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "subnyq/error.hpp"
#include "subnyq/harness.hpp"

namespace {

using namespace subnyq;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string profile;
  std::string method;
  std::optional<int> trials;
};

int fail(std::string_view kind, const std::string& message) {
  nlohmann::json rec = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << rec.dump() << '\n';
  return 2;
}

ExperimentConfig resolve(const Options& opt) {
  ExperimentConfig cfg = opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
  if (!opt.profile.empty()) apply_profile(cfg, opt.profile);
  if (!opt.method.empty()) cfg.estimator.method = doppler_method_from_string(opt.method);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.trials) cfg.trials = *opt.trials;
  if (!opt.out.empty()) cfg.output = opt.out;
  cfg.validate();
  return cfg;
}

// Writes `text` to `path`, or stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

std::string sibling_json(const std::string& csv_path) {
  const std::string ext = ".csv";
  if (csv_path.size() > ext.size() && csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0) {
    return csv_path.substr(0, csv_path.size() - ext.size()) + ".json";
  }
  return csv_path + ".json";
}

void cmd_sweep(const ExperimentConfig& cfg) {
  const SweepResult res = run_sweep(cfg);
  std::ostringstream csv;
  write_sweep_csv(csv, res.rows);
  emit(cfg.output, csv.str());
  if (!cfg.output.empty()) {
    emit(sibling_json(cfg.output), records_to_json(res.records, cfg.record_timing) + "\n");
  }
}

void cmd_timing(const ExperimentConfig& cfg) {
  std::ostringstream csv;
  write_timing_csv(csv, run_timing(cfg, cfg.timing_k));
  emit(cfg.output, csv.str());
}

int cmd_single(const ExperimentConfig& cfg) {
  const ExperimentContext ctx = ExperimentContext::build(cfg);
  const TrialRecord rec = run_trial(cfg, ctx, cfg.snr_db.size() - 1, 0);
  emit(cfg.output, trial_to_json(rec, cfg.record_timing) + "\n");
  return rec.ok ? 0 : fail(rec.failure, "trial failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-Nyquist pulse-Doppler delay/Doppler estimation experiments"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file (comments allowed)");
    sub->add_option("--seed", opt.seed, "Master seed");
    sub->add_option("--out", opt.out, "Output path; stdout when omitted");
    sub->add_option("--profile", opt.profile, "Radar profile")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--method", opt.method, "Doppler method")
        ->check(CLI::IsMember({"esprit", "esprit-fb", "dft"}));
    sub->add_option("--trials", opt.trials, "Trials per SNR point");
  };
  CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo RRMSE/CRB sweep over SNR");
  CLI::App* timing = app.add_subcommand("timing", "Median stage times versus target count");
  CLI::App* single = app.add_subcommand("single", "One trial at the last configured SNR");
  for (CLI::App* sub : {sweep, timing, single}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    const ExperimentConfig cfg = resolve(opt);
    if (sweep->parsed()) cmd_sweep(cfg);
    if (timing->parsed()) cmd_timing(cfg);
    if (single->parsed()) return cmd_single(cfg);
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
