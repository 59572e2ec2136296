#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phonolase/analysis.hpp"
#include "phonolase/config.hpp"
#include "phonolase/dynamics.hpp"
#include "phonolase/engine.hpp"
#include "phonolase/experiments.hpp"
#include "phonolase/oracle.hpp"

namespace py = pybind11;
using namespace phonolase;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> from_array(const py::array_t<double>& a) {
  const auto buf = a.request();
  const auto* p = static_cast<const double*>(buf.ptr);
  return std::vector<double>(p, p + buf.size);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Levitated-nanosphere phonon laser simulator (C++ core)";

  py::class_<TrapConfig>(m, "TrapConfig")
      .def(py::init<>())
      .def_readwrite("mass", &TrapConfig::mass)
      .def_readwrite("omega0", &TrapConfig::omega0)
      .def_readwrite("gamma", &TrapConfig::gamma)
      .def_readwrite("temperature", &TrapConfig::temperature)
      .def_readwrite("hbar_eff", &TrapConfig::hbar_eff)
      .def_readwrite("u_max", &TrapConfig::u_max)
      .def("validate", &TrapConfig::validate);

  py::class_<OscillatorState>(m, "OscillatorState")
      .def(py::init<>())
      .def_readwrite("x", &OscillatorState::x)
      .def_readwrite("v", &OscillatorState::v)
      .def_readwrite("t", &OscillatorState::t);

  m.def("step_oscillator", &step_oscillator, py::arg("state"), py::arg("trap"),
        py::arg("u"), py::arg("dt"), py::arg("noise_draw"));
  m.def("phonon_number", &phonon_number, py::arg("state"), py::arg("trap"));
  m.def("default_mass_from_diameter", &default_mass_from_diameter,
        py::arg("diameter"), py::arg("density"));
  m.def("thermal_phonon_number", &thermal_phonon_number, py::arg("trap"));

  py::class_<dsp::DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("sensitivity", &dsp::DetectorConfig::sensitivity)
      .def_readwrite("sample_rate", &dsp::DetectorConfig::sample_rate);

  py::class_<dsp::NonlinearBranchConfig>(m, "NonlinearBranchConfig")
      .def(py::init<>())
      .def_readwrite("bp_center", &dsp::NonlinearBranchConfig::bp_center)
      .def_readwrite("bp_q", &dsp::NonlinearBranchConfig::bp_q)
      .def_readwrite("phase_shift", &dsp::NonlinearBranchConfig::phase_shift)
      .def_readwrite("gain", &dsp::NonlinearBranchConfig::gain);

  py::class_<dsp::LinearBranchConfig>(m, "LinearBranchConfig")
      .def(py::init<>())
      .def_readwrite("pll_center", &dsp::LinearBranchConfig::pll_center)
      .def_readwrite("pll_bandwidth", &dsp::LinearBranchConfig::pll_bandwidth)
      .def_readwrite("pll_damping", &dsp::LinearBranchConfig::pll_damping)
      .def_readwrite("phase_shift", &dsp::LinearBranchConfig::phase_shift)
      .def_readwrite("depth", &dsp::LinearBranchConfig::depth);

  py::class_<EngineConfig>(m, "EngineConfig")
      .def(py::init<>())
      .def_readwrite("trap", &EngineConfig::trap)
      .def_readwrite("detector", &EngineConfig::detector)
      .def_readwrite("nonlinear", &EngineConfig::nonlinear)
      .def_readwrite("linear", &EngineConfig::linear)
      .def_readwrite("dt", &EngineConfig::dt)
      .def_readwrite("duration", &EngineConfig::duration)
      .def_readwrite("seed", &EngineConfig::seed)
      .def_readwrite("record_stride", &EngineConfig::record_stride)
      .def_readwrite("warmup", &EngineConfig::warmup)
      .def_readwrite("gain_switch_time", &EngineConfig::gain_switch_time)
      .def_readwrite("initial_phonon", &EngineConfig::initial_phonon)
      .def("validate", &EngineConfig::validate);

  py::class_<TrajectoryRecord>(m, "TrajectoryRecord")
      .def_property_readonly(
          "times", [](const TrajectoryRecord& r) { return to_array(r.times); })
      .def_property_readonly(
          "x", [](const TrajectoryRecord& r) { return to_array(r.x); })
      .def_property_readonly(
          "n", [](const TrajectoryRecord& r) { return to_array(r.n); })
      .def_property_readonly(
          "u_nl", [](const TrajectoryRecord& r) { return to_array(r.u_nl); })
      .def_property_readonly(
          "u_lin", [](const TrajectoryRecord& r) { return to_array(r.u_lin); })
      .def_property_readonly(
          "pll_freq",
          [](const TrajectoryRecord& r) { return to_array(r.pll_freq); })
      .def_property_readonly(
          "pll_locked",
          [](const TrajectoryRecord& r) {
            py::array_t<bool> out(static_cast<py::ssize_t>(r.pll_locked.size()));
            for (size_t i = 0; i < r.pll_locked.size(); ++i)
              out.mutable_data()[i] = r.pll_locked[i] != 0;
            return out;
          })
      .def("__len__", &TrajectoryRecord::size);

  m.def("run_closed_loop", &run_closed_loop, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("calibrate_linear_rate", &calibrate_linear_rate, py::arg("config"),
        py::arg("depth"), py::call_guard<py::gil_scoped_release>());

  py::class_<PhaseCalibration>(m, "PhaseCalibration")
      .def_readonly("cooling_phase", &PhaseCalibration::cooling_phase)
      .def_readonly("amplifying_phase", &PhaseCalibration::amplifying_phase);
  m.def("calibrate_phases", &calibrate_phases, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<oracle::RateParams>(m, "RateParams")
      .def(py::init<>())
      .def_readwrite("gain", &oracle::RateParams::gain)
      .def_readwrite("loss", &oracle::RateParams::loss)
      .def_readwrite("sat", &oracle::RateParams::sat)
      .def_readwrite("diffusion", &oracle::RateParams::diffusion);

  py::class_<PhononDistribution>(m, "PhononDistribution")
      .def_property_readonly(
          "bin_edges",
          [](const PhononDistribution& d) { return to_array(d.bin_edges); })
      .def_property_readonly(
          "probabilities",
          [](const PhononDistribution& d) { return to_array(d.probabilities); })
      .def_readonly("mean", &PhononDistribution::mean)
      .def_readonly("variance", &PhononDistribution::variance)
      .def_readonly("g2_zero", &PhononDistribution::g2_zero)
      .def_readonly("sample_count", &PhononDistribution::sample_count);

  m.def("steady_state_distribution", &oracle::steady_state_distribution,
        py::arg("params"), py::arg("n_max"), py::arg("grid_points") = 20000);
  m.def("suggest_n_max", &oracle::suggest_n_max, py::arg("params"));
  m.def("g2_from_params", &oracle::g2_from_params, py::arg("params"));
  m.def(
      "sde_trajectory",
      [](const oracle::RateParams& p, double n0, double dt, double duration,
         std::uint64_t seed) {
        const auto traj = oracle::sde_trajectory(p, n0, dt, duration, seed);
        return py::make_tuple(traj.dt, to_array(traj.n));
      },
      py::arg("params"), py::arg("n0"), py::arg("dt"), py::arg("duration"),
      py::arg("seed"));

  m.def(
      "phonon_histogram",
      [](const py::array_t<double>& n, int bins) {
        return phonon_histogram(from_array(n), bins);
      },
      py::arg("n_samples"), py::arg("bins") = 60);

  py::class_<IQSeries>(m, "IQSeries")
      .def_property_readonly(
          "times", [](const IQSeries& s) { return to_array(s.times); })
      .def_property_readonly("i",
                             [](const IQSeries& s) { return to_array(s.i); })
      .def_property_readonly("q",
                             [](const IQSeries& s) { return to_array(s.q); });

  m.def(
      "lock_in",
      [](const py::array_t<double>& x, double f_ref, double tau,
         double sample_rate, double t0) {
        return lock_in(from_array(x), f_ref, tau, sample_rate, t0);
      },
      py::arg("x"), py::arg("f_ref"), py::arg("tau"), py::arg("sample_rate"),
      py::arg("t0") = 0.0);

  py::class_<RadialStats>(m, "RadialStats")
      .def_readonly("peak_radius", &RadialStats::peak_radius)
      .def_readonly("annulus_score", &RadialStats::annulus_score);
  m.def("radial_statistics", &radial_statistics, py::arg("iq"));
  m.def(
      "radial_statistics",
      [](const py::array_t<double>& i, const py::array_t<double>& q) {
        IQSeries iq;
        iq.i = from_array(i);
        iq.q = from_array(q);
        iq.times.resize(iq.i.size());
        return radial_statistics(iq);
      },
      py::arg("i"), py::arg("q"));

  py::class_<PsdEstimate>(m, "PsdEstimate")
      .def_property_readonly(
          "freqs", [](const PsdEstimate& p) { return to_array(p.freqs); })
      .def_property_readonly(
          "psd", [](const PsdEstimate& p) { return to_array(p.psd); })
      .def_readonly("linewidth", &PsdEstimate::linewidth)
      .def_readonly("peak_freq", &PsdEstimate::peak_freq);
  m.def(
      "welch_psd",
      [](const py::array_t<double>& x, double sample_rate, size_t seg) {
        return welch_psd(from_array(x), sample_rate, seg);
      },
      py::arg("x"), py::arg("sample_rate"), py::arg("segment_length"));

  py::class_<ThresholdResult>(m, "ThresholdResult")
      .def_readonly("threshold_depth", &ThresholdResult::threshold_depth)
      .def_readonly("g2_crossing_depth", &ThresholdResult::g2_crossing_depth)
      .def_readonly("g2_consistent", &ThresholdResult::g2_consistent);
  m.def(
      "detect_threshold",
      [](const std::vector<std::tuple<double, double, double>>& sweep) {
        std::vector<SweepPoint> pts;
        pts.reserve(sweep.size());
        for (const auto& [d, mean, g2] : sweep) pts.push_back({d, mean, g2});
        return detect_threshold(pts);
      },
      py::arg("sweep"),
      "sweep: list of (depth, mean_n, g2_zero) tuples");

  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("dump_config", &dump_config, py::arg("spec"));

  py::enum_<ExperimentKind>(m, "ExperimentKind")
      .value("Run", ExperimentKind::Run)
      .value("Sweep", ExperimentKind::Sweep)
      .value("Transient", ExperimentKind::Transient)
      .value("Oracle", ExperimentKind::Oracle)
      .value("Calibrate", ExperimentKind::Calibrate);

  py::class_<ExperimentSpec>(m, "ExperimentSpec")
      .def(py::init<>())
      .def_readwrite("kind", &ExperimentSpec::kind)
      .def_readwrite("output_dir", &ExperimentSpec::output_dir)
      .def_readwrite("seed", &ExperimentSpec::seed)
      .def("engine_config", &ExperimentSpec::engine_config)
      .def("rate_params", &ExperimentSpec::rate_params);

  m.def(
      "run_experiment",
      [](const ExperimentSpec& spec, const std::string& output_dir, int jobs) {
        RunOptions opts;
        opts.output_dir = output_dir;
        opts.jobs = jobs;
        return run_experiment(spec, opts);
      },
      py::arg("spec"), py::arg("output_dir") = std::string(),
      py::arg("jobs") = 0, py::call_guard<py::gil_scoped_release>());

  py::register_exception<BlowupError>(m, "BlowupError");

  m.attr("__version__") = "0.1.0";
}
