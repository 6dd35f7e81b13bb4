#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "photostat/core_model.hpp"
#include "photostat/correlator.hpp"
#include "photostat/efficiency.hpp"
#include "photostat/errors.hpp"
#include "photostat/inference.hpp"
#include "photostat/reports.hpp"
#include "photostat/run_config.hpp"
#include "photostat/simulator.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace photostat;

namespace {

py::tuple measured(Measured m) { return py::make_tuple(m.value, m.error); }

TimeTagStream stream_from_arrays(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> channels,
                                 py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> timestamps,
                                 std::uint64_t duration_ps) {
  if (channels.ndim() != 1 || timestamps.ndim() != 1 || channels.shape(0) != timestamps.shape(0)) {
    throw InvalidArgument("channels and timestamps must be 1-d arrays of equal length");
  }
  TimeTagStream s;
  const auto n = static_cast<std::size_t>(channels.shape(0));
  s.records.resize(n);
  const auto* c = channels.data();
  const auto* t = timestamps.data();
  for (std::size_t i = 0; i < n; ++i) s.records[i] = TimeTag{c[i], t[i]};
  s.duration_ps = duration_ps ? duration_ps : (n ? s.records.back().timestamp_ps + 1 : 0);
  s.check_invariants();
  return s;
}

py::dict stream_to_dict(const TimeTagStream& s) {
  py::array_t<std::uint8_t> ch(static_cast<py::ssize_t>(s.records.size()));
  py::array_t<std::uint64_t> ts(static_cast<py::ssize_t>(s.records.size()));
  auto c = ch.mutable_unchecked<1>();
  auto t = ts.mutable_unchecked<1>();
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    c(static_cast<py::ssize_t>(i)) = s.records[i].channel;
    t(static_cast<py::ssize_t>(i)) = s.records[i].timestamp_ps;
  }
  return py::dict("channels"_a = ch, "timestamps_ps"_a = ts, "duration_ps"_a = s.duration_ps, "meta"_a = s.meta);
}

Histogram histogram_from(py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> counts,
                         std::int64_t bin_width_ps, std::int64_t t_min_ps) {
  if (counts.ndim() != 1) throw InvalidArgument("counts must be a 1-d array");
  if (bin_width_ps < 1) throw InvalidArgument("bin_width_ps must be at least 1");
  Histogram h;
  h.bin_width_ps = bin_width_ps;
  h.t_min_ps = t_min_ps;
  h.counts.assign(counts.data(), counts.data() + counts.shape(0));
  h.t_max_ps = t_min_ps + bin_width_ps * static_cast<std::int64_t>(h.counts.size());
  for (auto v : h.counts) h.total_pairs += v;
  return h;
}

py::dict histogram_to_dict(const Histogram& h) {
  py::array_t<std::uint64_t> counts(static_cast<py::ssize_t>(h.counts.size()));
  std::memcpy(counts.mutable_data(), h.counts.data(), h.counts.size() * sizeof(std::uint64_t));
  return py::dict("counts"_a = counts, "bin_width_ps"_a = h.bin_width_ps, "t_min_ps"_a = h.t_min_ps,
                  "t_max_ps"_a = h.t_max_ps, "total_pairs"_a = h.total_pairs);
}

std::string report_json(const FitReport& r) { return to_json(r).dump(); }

}  // namespace

PYBIND11_MODULE(_photostat, m) {
  m.doc() = "Photon-statistics simulation, correlation and fitting";
  m.attr("__version__") = version();

  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
  static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const IoError& e) {
      py::set_error(io_error, e.what());
    }
  });

  m.def(
      "simulate_config",
      [](const std::filesystem::path& path, std::optional<std::uint64_t> periods, std::optional<std::uint64_t> seed,
         unsigned threads) {
        RunConfig rc = load_run_config(path);
        if (periods) rc.sim.n_periods = *periods;
        if (seed) rc.sim.rng_seed = *seed;
        TimeTagStream s;
        {
          py::gil_scoped_release release;
          s = simulate(rc.sim, SimOptions{threads});
        }
        return stream_to_dict(s);
      },
      "path"_a, "periods"_a = py::none(), "seed"_a = py::none(), "threads"_a = 1,
      "Simulate the run described by a config file; returns channels, timestamps_ps, duration_ps, meta.");

  m.def(
      "config_digest",
      [](const std::filesystem::path& path) { return config_digest(load_run_config(path).sim); }, "path"_a);

  m.def(
      "correlate",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> channels,
         py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> timestamps, std::int64_t bin_width_ps,
         std::int64_t window_ps) {
        const TimeTagStream s = stream_from_arrays(channels, timestamps, 0);
        Histogram h;
        {
          py::gil_scoped_release release;
          h = correlate(s, bin_width_ps, window_ps);
        }
        return histogram_to_dict(h);
      },
      "channels"_a, "timestamps_ps"_a, "bin_width_ps"_a = kDefaultHomBinWidthPs, "window_ps"_a = 52'000);

  m.def(
      "g2_zero",
      [](py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> counts, std::int64_t bin_width_ps,
         std::int64_t t_min_ps, double rep_period, double center_window, double norm_span) {
        const G2Result r = g2_zero(histogram_from(counts, bin_width_ps, t_min_ps), rep_period, center_window, norm_span);
        return py::dict("value"_a = r.value, "error"_a = r.error, "center_counts"_a = r.center_counts,
                        "side_mean"_a = r.side_mean, "side_peaks"_a = r.side_peaks);
      },
      "counts"_a, "bin_width_ps"_a, "t_min_ps"_a, "rep_period"_a, "center_window"_a = 2.0, "norm_span"_a = 300.0);

  m.def(
      "fit_hom_json",
      [](py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> counts, std::int64_t bin_width_ps,
         std::int64_t t_min_ps, double gamma, double delta, double rep_period, double irf_sigma,
         std::optional<double> exclusion, const std::string& weighting) {
        HomFitOptions o;
        o.gamma = gamma;
        o.delta = delta;
        o.rep_period = rep_period;
        o.irf_sigma = irf_sigma;
        o.exclusion_half_width = exclusion;
        o.weighting = weighting_from_string(weighting);
        const Histogram h = histogram_from(counts, bin_width_ps, t_min_ps);
        FitReport r;
        {
          py::gil_scoped_release release;
          r = fit_hom(h, o);
        }
        return report_json(r);
      },
      "counts"_a, "bin_width_ps"_a, "t_min_ps"_a, "gamma"_a, "delta"_a, "rep_period"_a, "irf_sigma"_a,
      "exclusion_half_width"_a = py::none(), "weighting"_a = "model");

  m.def(
      "fit_saturation_json",
      [](const std::vector<double>& power, const std::vector<double>& counts, const std::vector<double>& error) {
        if (power.size() != counts.size() || power.size() != error.size()) {
          throw InvalidArgument("power, counts and error must have equal length");
        }
        std::vector<SaturationPoint> pts;
        for (std::size_t i = 0; i < power.size(); ++i) pts.push_back({power[i], counts[i], error[i]});
        return report_json(fit_saturation(pts));
      },
      "power"_a, "counts"_a, "error"_a);

  m.def(
      "hom_bin_expectation",
      [](double gamma, double gamma_dp, double amplitude, double delta, double rep_period, double irf_sigma,
         double t_min, double bin_width, std::size_t bins) {
        HomModelParams p;
        p.gamma = gamma;
        p.gamma_dp = gamma_dp;
        p.amplitude = amplitude;
        p.delta = delta;
        p.rep_period = rep_period;
        p.irf_sigma = irf_sigma;
        const auto v = hom_bin_expectation(p, BinGrid{t_min, bin_width, bins});
        return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
      },
      "gamma"_a, "gamma_dp"_a, "amplitude"_a, "delta"_a, "rep_period"_a, "irf_sigma"_a, "t_min"_a, "bin_width"_a,
      "bins"_a);

  m.def("saturation_curve", &saturation_curve, "power"_a, "p_sat"_a, "c_sat"_a);
  m.def("visibility", &visibility, "gamma"_a, "gamma_dp"_a);
  m.def(
      "coherence_times",
      [](double gamma, double gamma_dp) {
        const CoherenceTimes c = coherence_times(gamma, gamma_dp);
        return py::dict("t1"_a = c.t1, "t2_star"_a = c.t2_star, "t2"_a = c.t2);
      },
      "gamma"_a, "gamma_dp"_a);
  m.def("decoherence_energy_uev", &decoherence_energy_uev, "gamma"_a, "gamma_dp"_a);

  m.def(
      "eta_relative",
      [](double c_qd, double c_qd_err, double c_bulk, double c_bulk_err, double eta_bulk) {
        return measured(eta_relative({c_qd, c_qd_err}, {c_bulk, c_bulk_err}, eta_bulk));
      },
      "c_sat_qd"_a, "c_sat_qd_err"_a = 0.0, "c_sat_bulk"_a, "c_sat_bulk_err"_a = 0.0, "eta_bulk"_a);
  m.def(
      "eta_absolute",
      [](double c, double c_err, double eta_setup, double eta_setup_err, double rep_rate, double alpha_eps) {
        return measured(eta_absolute({c, c_err}, {eta_setup, eta_setup_err}, rep_rate, alpha_eps));
      },
      "c_sat"_a, "c_sat_err"_a = 0.0, "eta_setup"_a, "eta_setup_err"_a = 0.0, "rep_rate"_a, "alpha_eps"_a = 1.0);
  m.def(
      "single_line_rate",
      [](double total, double total_err, double g2, double g2_err) {
        return measured(single_line_rate({total, total_err}, {g2, g2_err}));
      },
      "total_rate"_a, "total_rate_err"_a = 0.0, "g2"_a, "g2_err"_a = 0.0);
  m.def(
      "preparation_bounds",
      [](double ratio, double gamma_fast, double gamma_nrad, double gamma_nrad_err) {
        const PreparationBounds b = preparation_bounds(ratio, gamma_fast, {gamma_nrad, gamma_nrad_err});
        return py::dict("eta_qe"_a = measured(b.eta_qe),
                        "xi_ratio"_a = py::make_tuple(b.xi_ratio.lower, b.xi_ratio.upper),
                        "occupation"_a = py::make_tuple(b.occupation.lower, b.occupation.upper),
                        "epsilon"_a = py::make_tuple(measured(b.epsilon.lower), measured(b.epsilon.upper)));
      },
      "i_x2_over_i_x"_a, "gamma_fast"_a, "gamma_nrad"_a, "gamma_nrad_err"_a = 0.0);
  m.def("alpha_upper_bound", &alpha_upper_bound, "i_slow"_a, "i_fast"_a);
  m.def("polarization_fraction", &polarization_fraction, "alpha"_a, "eta_ratio"_a, "zero_alpha_limit"_a = false);
  m.def(
      "beta_and_efficiency",
      [](double detuning_nm, double q_factor, double lambda_0, double purcell_peak, double eta_cav, double eta_rad,
         double gamma_bulk, double background_inhibition) {
        CavityCoupling c{q_factor, lambda_0, purcell_peak, eta_cav, eta_rad, gamma_bulk, background_inhibition};
        const BetaEfficiency b = beta_and_efficiency(detuning_nm, c);
        return py::dict("beta"_a = b.beta, "eta_x"_a = b.eta_x, "purcell"_a = b.purcell, "gamma_cav"_a = b.gamma_cav,
                        "gamma_tot"_a = b.gamma_tot);
      },
      "detuning_nm"_a, "q_factor"_a = 300.0, "lambda_0"_a = 930.0, "purcell_peak"_a = 6.0, "eta_cav"_a = 0.5,
      "eta_rad"_a = 0.0, "gamma_bulk"_a = 1.0, "background_inhibition"_a = 0.5);
}
