#include "phonolase/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include "phonolase/analysis.hpp"
#include "phonolase/csv.hpp"
#include "phonolase/rng.hpp"
#include "phonolase/svg_plot.hpp"

namespace fs = std::filesystem;

namespace phonolase {

namespace {

constexpr const char* kVersion = "0.1.0";

// Tracks files written by one experiment so failures leave no partial output.
class OutputSet {
 public:
  explicit OutputSet(const std::string& dir) : dir_(dir) {
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) {
    const std::string p = (fs::path(dir_) / name).string();
    written_.push_back(p);
    return p;
  }

  void discard_all() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::string dir_;
  std::vector<std::string> written_;
};

void write_manifest(OutputSet& out, const ExperimentSpec& spec) {
  std::ofstream f(out.path("manifest.txt"));
  f << "# phonolase " << kVersion << " run manifest; rerun with\n"
    << "#   phonolase " << kind_name(spec.kind) << " --config manifest.txt\n"
    << "artifact.version = " << kVersion << "\n"
    << dump_config(spec);
}

void write_trajectory_csv(const std::string& path,
                          const TrajectoryRecord& rec) {
  CsvWriter csv(path);
  csv.header({"t_s", "x_m", "n", "u_nl", "u_lin", "pll_freq_hz",
              "pll_locked"});
  for (size_t i = 0; i < rec.size(); ++i) {
    csv.row({rec.times[i], rec.x[i], rec.n[i], rec.u_nl[i], rec.u_lin[i],
             rec.pll_freq[i], static_cast<double>(rec.pll_locked[i])});
  }
}

// Decorrelation stride for distribution estimates: about 1/gamma between
// samples (energy autocorrelation time).
int stats_stride(const ExperimentSpec& spec) {
  const double dt = 1.0 / spec.sample_rate_hz;
  const double gamma = kTwoPi * spec.gamma_hz;
  if (gamma <= 0.0) return 4096;
  return std::max(1, static_cast<int>(0.25 / gamma / dt));
}

struct DepthOutcome {
  SweepRow row;
  TrajectoryRecord stats_rec;
  IQSeries iq;  // subsampled, from the waveform pass
  std::string error;
  bool config_error = false;
};

DepthOutcome run_one_depth(const ExperimentSpec& spec, size_t index,
                           double depth) {
  DepthOutcome out;
  out.row.depth = depth;
  try {
    // Statistics pass: long, coarse stride, for the phonon distribution.
    EngineConfig stats_cfg = spec.engine_config();
    stats_cfg.linear.depth = depth;
    stats_cfg.seed = split_seed(spec.seed, 2 * index);
    stats_cfg.record_stride = stats_stride(spec);
    const TrajectoryRecord stats = run_closed_loop(stats_cfg);
    const PhononDistribution dist =
        phonon_histogram(stats, spec.histogram_bins);
    out.row.mean_n = dist.mean;
    out.row.var_n = dist.variance;
    out.row.g2_zero = dist.g2_zero;

    // Waveform pass: short, fine stride, for quadratures and the PSD.
    EngineConfig wave_cfg = stats_cfg;
    wave_cfg.seed = split_seed(spec.seed, 2 * index + 1);
    wave_cfg.record_stride = spec.wave_stride;
    wave_cfg.duration = wave_cfg.warmup + spec.wave_duration_s;
    const TrajectoryRecord wave = run_closed_loop(wave_cfg);
    const double wave_rate =
        spec.sample_rate_hz / static_cast<double>(spec.wave_stride);

    const IQSeries iq = lock_in(wave.x, spec.omega0_hz, spec.lock_in_tau_s,
                                wave_rate, wave.times.empty() ? 0.0
                                                              : wave.times[0]);
    // Subsample I/Q at twice the lock-in time constant before the radial
    // statistics (decorrelates the filter memory).
    const int iq_stride = std::max(
        1, static_cast<int>(2.0 * spec.lock_in_tau_s * wave_rate));
    IQSeries thin;
    for (size_t k = 0; k < iq.i.size(); k += iq_stride) {
      thin.times.push_back(iq.times[k]);
      thin.i.push_back(iq.i[k]);
      thin.q.push_back(iq.q[k]);
    }
    out.iq = thin;
    if (thin.i.size() >= 1000) {
      const RadialStats rs = radial_statistics(thin);
      out.row.annulus_score = rs.annulus_score;
      out.row.peak_radius = rs.peak_radius;
    } else {
      out.row.annulus_score = std::numeric_limits<double>::quiet_NaN();
      out.row.peak_radius = std::numeric_limits<double>::quiet_NaN();
    }

    const size_t seg = std::min<size_t>(spec.welch_segment, wave.x.size() / 4);
    if (seg >= 16) {
      const PsdEstimate psd = welch_psd(wave.x, wave_rate, seg);
      out.row.linewidth_hz =
          psd.linewidth.value_or(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.row.linewidth_hz = std::numeric_limits<double>::quiet_NaN();
    }
    out.stats_rec = stats;
  } catch (const std::invalid_argument& e) {
    out.error = e.what();
    out.config_error = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec, int jobs) {
  if (jobs <= 0) {
    jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
  }
  const auto& depths = spec.sweep_depths;
  std::vector<DepthOutcome> outcomes(depths.size());

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= depths.size()) return;
      outcomes[i] = run_one_depth(spec, i, depths[i]);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(jobs, static_cast<int>(depths.size()));
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const auto& oc : outcomes) {
    if (!oc.error.empty()) {
      const std::string msg = "sweep point depth=" +
                              CsvWriter::format(oc.row.depth) +
                              " failed: " + oc.error;
      if (oc.config_error) throw std::invalid_argument(msg);
      throw BlowupError(msg, 0.0);
    }
  }

  SweepResult result;
  result.rows.reserve(outcomes.size());
  std::vector<SweepPoint> pts;
  for (auto& oc : outcomes) {
    result.rows.push_back(oc.row);
    result.stats_records.push_back(std::move(oc.stats_rec));
    pts.push_back({oc.row.depth, oc.row.mean_n, oc.row.g2_zero});
  }

  result.threshold_depth = std::numeric_limits<double>::quiet_NaN();
  result.g2_crossing_depth = std::numeric_limits<double>::quiet_NaN();
  try {
    const ThresholdResult th = detect_threshold(pts);
    result.threshold_depth = th.threshold_depth;
    result.g2_crossing_depth = th.g2_crossing_depth;
    result.g2_consistent = th.g2_consistent;
    for (auto& row : result.rows)
      row.at_threshold = false;
    for (auto& row : result.rows) {
      if (row.depth >= th.threshold_depth) {
        row.at_threshold = true;
        break;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "phonolase: threshold detection: " << e.what() << "\n";
  }
  return result;
}

namespace {

void emit_sweep_outputs(OutputSet& out, const ExperimentSpec& spec,
                        const SweepResult& res) {
  for (size_t i = 0; i < res.stats_records.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "trajectory_%03zu.csv", i);
    write_trajectory_csv(out.path(name), res.stats_records[i]);
  }
  {
    CsvWriter csv(out.path("summary.csv"));
    csv.header({"depth", "mean_n", "var_n", "g2_zero", "annulus_score",
                "linewidth_hz", "peak_radius", "at_threshold"});
    for (const auto& r : res.rows) {
      csv.row({r.depth, r.mean_n, r.var_n, r.g2_zero, r.annulus_score,
               r.linewidth_hz, r.peak_radius, r.at_threshold ? 1.0 : 0.0});
    }
  }
  {
    CsvWriter csv(out.path("threshold.csv"));
    csv.header({"threshold_depth", "g2_crossing_depth", "g2_consistent"});
    csv.row({res.threshold_depth, res.g2_crossing_depth,
             res.g2_consistent ? 1.0 : 0.0});
  }
  if (spec.emit_plots) {
    SvgPlot p1;
    p1.title = "Steady-state phonon number vs pump depth";
    p1.x_label = "linear modulation depth";
    p1.y_label = "mean n";
    p1.log_y = true;
    SvgSeries s1;
    for (const auto& r : res.rows) {
      s1.x.push_back(r.depth);
      s1.y.push_back(r.mean_n);
    }
    s1.points_only = true;
    p1.series.push_back(s1);
    p1.write(out.path("plot_mean_n_vs_depth.svg"));

    SvgPlot p2;
    p2.title = "g2(0) vs pump depth";
    p2.x_label = "linear modulation depth";
    p2.y_label = "g2(0)";
    SvgSeries s2;
    for (const auto& r : res.rows) {
      s2.x.push_back(r.depth);
      s2.y.push_back(r.g2_zero);
    }
    s2.points_only = true;
    p2.series.push_back(s2);
    p2.write(out.path("plot_g2_vs_depth.svg"));
  }
}

void run_single(OutputSet& out, const ExperimentSpec& spec) {
  const TrajectoryRecord rec = run_closed_loop(spec.engine_config());
  write_trajectory_csv(out.path("trajectory.csv"), rec);
  if (spec.emit_plots) {
    SvgPlot p;
    p.title = spec.kind == ExperimentKind::Transient
                  ? "Transient phonon number"
                  : "Phonon number";
    p.x_label = "t (s)";
    p.y_label = "n";
    p.log_y = spec.kind == ExperimentKind::Transient;
    SvgSeries s;
    s.x = rec.times;
    s.y = rec.n;
    p.series.push_back(std::move(s));
    p.write(out.path("plot_n_t.svg"));
  }
}

void run_oracle(OutputSet& out, const ExperimentSpec& spec) {
  oracle::RateParams params = spec.rate_params();
  const double n_max = spec.oracle_n_max > 0.0 ? spec.oracle_n_max
                                               : oracle::suggest_n_max(params);
  const PhononDistribution dist = oracle::steady_state_distribution(
      params, n_max, spec.oracle_grid_points);
  {
    CsvWriter csv(out.path("oracle_distribution.csv"));
    csv.header({"n_lo", "n_hi", "probability"});
    for (size_t i = 0; i < dist.probabilities.size(); ++i)
      csv.row({dist.bin_edges[i], dist.bin_edges[i + 1],
               dist.probabilities[i]});
  }
  {
    CsvWriter csv(out.path("oracle_summary.csv"));
    csv.header({"mean_n", "var_n", "g2_zero", "n_max"});
    csv.row({dist.mean, dist.variance, dist.g2_zero, n_max});
  }
  if (spec.oracle_sde_duration_s > 0.0) {
    double dt = spec.oracle_sde_dt_s;
    if (dt <= 0.0) {
      double n_typ = std::max(spec.oracle_sde_n0, dist.mean + 6.0 *
                              std::sqrt(std::max(dist.variance, 0.0)));
      const double fastest =
          std::max({params.loss, params.gain, params.sat * n_typ, 1e-12});
      dt = 0.005 / fastest;
    }
    const auto traj = oracle::sde_trajectory(
        params, spec.oracle_sde_n0, dt, spec.oracle_sde_duration_s, spec.seed);
    CsvWriter csv(out.path("oracle_sde.csv"));
    csv.header({"t_s", "n"});
    for (size_t i = 0; i < traj.n.size(); ++i)
      csv.row({static_cast<double>(i) * traj.dt, traj.n[i]});
  }
}

void run_calibrate(OutputSet& out, const ExperimentSpec& spec) {
  const EngineConfig cfg = spec.engine_config();
  const PhaseCalibration phases = calibrate_phases(cfg);
  const double g_rate = calibrate_linear_rate(cfg, spec.linear_depth);
  CsvWriter csv(out.path("calibration.csv"));
  csv.header({"cooling_phase_rad", "amplifying_phase_rad",
              "linear_rate_per_s", "gamma_per_s", "depth"});
  csv.row({phases.cooling_phase, phases.amplifying_phase, g_rate,
           kTwoPi * spec.gamma_hz, spec.linear_depth});
}

}  // namespace

int run_experiment(const ExperimentSpec& spec_in, const RunOptions& opts) {
  ExperimentSpec spec = spec_in;
  if (opts.seed_override) spec.seed = *opts.seed_override;
  if (opts.plots_override) spec.emit_plots = *opts.plots_override;
  if (!opts.output_dir.empty()) spec.output_dir = opts.output_dir;

  if (spec.kind == ExperimentKind::Transient && !spec.gain_switch_time_s) {
    std::cerr << "phonolase: config: engine.gain_switch_time_s is required "
                 "for kind=transient\n";
    return 1;
  }

  OutputSet out(spec.output_dir);
  try {
    write_manifest(out, spec);
    switch (spec.kind) {
      case ExperimentKind::Run:
      case ExperimentKind::Transient:
        run_single(out, spec);
        break;
      case ExperimentKind::Sweep: {
        const SweepResult res = run_sweep(spec, opts.jobs);
        emit_sweep_outputs(out, spec, res);
        break;
      }
      case ExperimentKind::Oracle:
        run_oracle(out, spec);
        break;
      case ExperimentKind::Calibrate:
        run_calibrate(out, spec);
        break;
    }
  } catch (const std::invalid_argument& e) {
    out.discard_all();
    std::cerr << "phonolase: config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    out.discard_all();
    std::cerr << "phonolase: numerical abort: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace phonolase
