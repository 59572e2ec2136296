#pragma once

#include <string>

#include "phonolase/config.hpp"

namespace phonolase {

struct RunOptions {
  std::string output_dir;  // empty = use spec.output_dir
  int jobs = 0;            // 0 = available parallelism
  std::optional<std::uint64_t> seed_override;
  std::optional<bool> plots_override;
};

/// Execute the experiment described by `spec`. Writes trajectory/summary
/// CSVs, a manifest that reproduces the run bit-identically, and optional
/// SVG plots, all inside the output directory. Returns a process exit code:
/// 0 success, 1 configuration error, 2 numerical abort. Partial outputs are
/// removed on failure.
int run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

/// Row of the sweep summary (one per pump depth).
struct SweepRow {
  double depth = 0.0;
  double mean_n = 0.0;
  double var_n = 0.0;
  double g2_zero = 0.0;
  double annulus_score = 0.0;
  double linewidth_hz = 0.0;  // NaN when the Lorentzian fit fails
  double peak_radius = 0.0;
  bool at_threshold = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<TrajectoryRecord> stats_records;  // one per depth
  double threshold_depth = 0.0;      // NaN if no knee was detected
  double g2_crossing_depth = 0.0;    // NaN if g2 never crosses 1.5
  bool g2_consistent = false;
};

/// The sweep computation without file output; used by run_experiment and
/// directly by the acceptance suite.
SweepResult run_sweep(const ExperimentSpec& spec, int jobs);

}  // namespace phonolase
