// Simulates a short sinusoidal drive, estimates the twist from radar plus either angular
// measurements or raw events, and prints the error metrics of both runs.
//
//   twist_demo [output_dir] [duration_s]

#include "revo/revo.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

struct Run {
  revo::PipelineResult result;
  revo::MetricsReport metrics;
  double seconds = 0.0;
};

Run estimate(const revo::Dataset& ds, revo::AngularSource source) {
  revo::PipelineConfig cfg;
  cfg.angular_source = source;
  const auto t0 = std::chrono::steady_clock::now();
  Run r;
  r.result = revo::run_pipeline(ds, revo::intrinsics_from_meta(ds.meta), revo::extrinsics_from_meta(ds.meta), cfg);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.metrics = revo::compute_metrics(revo::to_twist_samples(r.result.estimates), ds.truth);
  return r;
}

void print_row(const char* name, const Run& r) {
  const auto& m = r.metrics;
  std::printf("%-14s %8zu %10.4f %10.4f %10.4f %10.4f %9.3f%% %8.2f\n", name, r.result.angular.size(), m.ave_linear,
              m.ave_angular, m.rve_linear, m.ape, 100.0 * m.rpe_window_ratio, r.seconds);
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "twist_demo_out";
  const double duration = argc > 2 ? std::atof(argv[2]) : 20.0;

  revo::ScenarioConfig sc = revo::default_scenario();
  sc.duration_s = duration;
  sc.event.enabled = true;
  try {
    const revo::Dataset ds = revo::simulate_dataset(sc);
    std::printf("%.0f s scenario: %zu radar scans, %zu events, %zu angular samples\n\n", duration, ds.radar.size(),
                ds.events.size(), ds.angular->size());

    const Run meas = estimate(ds, revo::AngularSource::Measurements);
    const Run events = estimate(ds, revo::AngularSource::Events);

    std::printf("%-14s %8s %10s %10s %10s %10s %10s %8s\n", "angular input", "w meas", "AVE v", "AVE w", "RVE v", "APE",
                "RPE/dist", "time s");
    print_row("measurements", meas);
    print_row("events", events);

    std::filesystem::create_directories(out);
    revo::write_estimate_csv(out / "estimate_events.csv", events.result.estimates);
    std::ofstream(out / "twist_events.svg") << revo::render_twist_svg(revo::to_twist_samples(events.result.estimates), ds.truth);
    std::printf("\nwrote %s and %s\n", (out / "estimate_events.csv").c_str(), (out / "twist_events.svg").c_str());
  } catch (const revo::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
