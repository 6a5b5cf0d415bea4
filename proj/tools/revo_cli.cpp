// revo command line: simulate, estimate, flow, evaluate, plot.

#include "revo/revo.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

int exit_code_for(revo::ErrorCode c) {
  switch (c) {
    case revo::ErrorCode::DataError:
    case revo::ErrorCode::ConfigError:
    case revo::ErrorCode::Domain:
    case revo::ErrorCode::ContractViolation:
      return kData;
    default:
      return kSolver;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw revo::Error(revo::ErrorCode::DataError, path.string() + ": cannot open for writing");
  out << text;
}

revo::Config config_or_default(const std::string& path) {
  return path.empty() ? revo::Config{} : revo::load_config(path);
}

int cmd_simulate(const std::string& scenario, const std::string& out, std::optional<std::uint64_t> seed) {
  revo::Config cfg = config_or_default(scenario);
  if (seed) cfg.scenario.seed = *seed;
  const auto ds = revo::simulate_dataset(cfg.scenario);
  revo::write_dataset(ds, out);
  std::cerr << "wrote " << ds.radar.size() << " radar scans, " << ds.events.size() << " events, "
            << (ds.angular ? ds.angular->size() : 0) << " angular samples to " << out << '\n';
  return kOk;
}

int cmd_estimate(const std::string& data, const std::string& config, const std::string& out, bool quiet) {
  const revo::Config cfg = config_or_default(config);
  const auto ds = revo::read_dataset(data);
  const auto intr = revo::intrinsics_from_meta(ds.meta);
  const auto ext = revo::extrinsics_from_meta(ds.meta);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = revo::run_pipeline(ds, intr, ext, cfg.pipeline, [quiet](const std::string& w) {
    if (!quiet) std::cerr << "warning: " << w << '\n';
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(out);
  revo::write_estimate_csv(fs::path(out) / "estimate.csv", res.estimates);
  revo::write_spline_json(fs::path(out) / "spline.json", res.spline);
  write_text(fs::path(out) / "stats.json", revo::stats_to_json(res.stats).dump(2) + "\n");
  if (!quiet)
    for (const auto& r : res.reports) std::cerr << revo::format_report(r) << '\n';
  std::cerr << res.estimates.size() << " estimates from " << res.radar.size() << " radar and " << res.angular.size()
            << " angular measurements (" << (res.used_events ? "events" : "angular.csv") << ") in " << secs << " s\n";
  return kOk;
}

int cmd_flow(const std::string& data, const std::string& config, std::int64_t at, const std::string& out) {
  const revo::Config cfg = config_or_default(config);
  const auto events = revo::read_events_csv(fs::path(data) / "events.csv");
  std::map<std::string, std::string> meta;
  if (fs::exists(fs::path(data) / "meta.txt")) meta = revo::read_meta(fs::path(data) / "meta.txt");
  const auto j = revo::flow_debug(events, revo::intrinsics_from_meta(meta), cfg.pipeline.flow, at);
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_text(out, text);
  return kOk;
}

int cmd_evaluate(const std::string& est, const std::string& truth, const std::string& out, const revo::MetricsConfig& mc) {
  const auto estimates = revo::read_estimate_csv(fs::path(est) / "estimate.csv");
  const auto ref = revo::read_truth_csv(truth);
  const auto report = revo::compute_metrics(revo::to_twist_samples(estimates), ref, mc);
  const std::string text = revo::metrics_to_json(report).dump(2) + "\n";
  write_text(out, text);
  std::cout << text;
  return kOk;
}

int cmd_plot(const std::string& est, const std::string& truth, const std::string& out) {
  std::vector<revo::TwistSample> estimate, ref;
  if (!est.empty()) estimate = revo::to_twist_samples(revo::read_estimate_csv(fs::path(est) / "estimate.csv"));
  if (!truth.empty()) ref = revo::read_truth_csv(truth);
  if (estimate.empty() && ref.empty()) throw revo::Error(revo::ErrorCode::DataError, "nothing to plot");
  write_text(out, revo::render_twist_svg(estimate, ref));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar and event camera twist estimation toolkit"};
  app.require_subcommand(1);

  std::string scenario, out_dir;
  std::optional<std::uint64_t> seed;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--scenario", scenario, "Config file with a [sim] section")->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output dataset directory")->required();
  sim->add_option("--seed", seed, "Override the scenario seed");

  std::string data, config, est_out;
  bool quiet = false;
  auto* est = app.add_subcommand("estimate", "Run the front-ends and back-end on a dataset");
  est->add_option("--data", data, "Dataset directory")->required();
  est->add_option("--config", config, "Config file")->check(CLI::ExistingFile);
  est->add_option("--out", est_out, "Output directory")->required();
  est->add_flag("--quiet", quiet, "Suppress per-window reports");

  std::string flow_data, flow_config, flow_out;
  std::int64_t at = 0;
  auto* flow = app.add_subcommand("flow", "Dump time surface and flow state at a time");
  flow->add_option("--data", flow_data, "Dataset directory")->required();
  flow->add_option("--at", at, "Time in ns")->required();
  flow->add_option("--config", flow_config, "Config file")->check(CLI::ExistingFile);
  flow->add_option("--out", flow_out, "Write JSON here instead of stdout");

  std::string eval_est, eval_truth, eval_out;
  revo::MetricsConfig mc;
  auto* eval = app.add_subcommand("evaluate", "Compare an estimate with ground truth");
  eval->add_option("--est", eval_est, "Estimate directory")->required();
  eval->add_option("--truth", eval_truth, "truth.csv")->required();
  eval->add_option("--out", eval_out, "report.json path")->required();
  eval->add_option("--rve-horizon", mc.rve_horizon_s, "RVE horizon [s]");
  eval->add_option("--rpe-segment", mc.rpe_segment_m, "RPE segment length [m]");
  eval->add_option("--rpe-window", mc.rpe_window_s, "RPE time window [s]");

  std::string plot_est, plot_truth, plot_out;
  auto* plot = app.add_subcommand("plot", "Render velocity traces as SVG");
  plot->add_option("--est", plot_est, "Estimate directory");
  plot->add_option("--truth", plot_truth, "truth.csv");
  plot->add_option("--out", plot_out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(scenario, out_dir, seed);
    if (*est) return cmd_estimate(data, config, est_out, quiet);
    if (*flow) return cmd_flow(flow_data, flow_config, at, flow_out);
    if (*eval) return cmd_evaluate(eval_est, eval_truth, eval_out, mc);
    if (*plot) {
      if (plot_est.empty() && plot_truth.empty()) {
        std::cerr << "plot needs --est and/or --truth\n";
        return kUsage;
      }
      return cmd_plot(plot_est, plot_truth, plot_out);
    }
  } catch (const revo::Error& e) {
    std::cerr << "error [" << revo::to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
