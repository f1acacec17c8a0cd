#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "echomem/bloch.hpp"
#include "echomem/config.hpp"
#include "echomem/core.hpp"
#include "echomem/echo.hpp"
#include "echomem/experiments.hpp"
#include "echomem/interferometer.hpp"
#include "echomem/parallel.hpp"
#include "echomem/propagation.hpp"

namespace py = pybind11;
using namespace echomem;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Envelopes cross the boundary as plain complex arrays plus a TimeGrid.
ComplexEnvelope to_envelope(const CArray& a, const TimeGrid& grid)
{
    if (a.ndim() != 1 || static_cast<std::size_t>(a.shape(0)) != grid.size()) {
        throw GridMismatchError("array length " + std::to_string(a.size()) + " does not match grid size " +
                                std::to_string(grid.size()));
    }
    return ComplexEnvelope(grid, std::vector<cplx>(a.data(), a.data() + a.size()));
}

CArray to_array(const ComplexEnvelope& e)
{
    CArray out(static_cast<py::ssize_t>(e.size()));
    std::copy(e.samples().begin(), e.samples().end(), out.mutable_data());
    return out;
}

DArray to_array(const std::vector<double>& v)
{
    DArray out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

DetuningGrid make_detunings(const DArray& detunings, const DArray& weights)
{
    DetuningGrid g;
    g.detunings.assign(detunings.data(), detunings.data() + detunings.size());
    g.weights.assign(weights.data(), weights.data() + weights.size());
    g.validate();
    return g;
}

py::dict echo_dict(const EchoRecord& r)
{
    py::dict d;
    d["mode_index"] = r.mode_index;
    d["peak_time"] = r.peak_time;
    d["window"] = py::make_tuple(r.window_begin, r.window_end);
    d["energy"] = r.energy;
    d["efficiency"] = r.efficiency;
    return d;
}

py::list echo_list(const std::vector<EchoRecord>& records)
{
    py::list out;
    for (const auto& r : records) {
        out.append(echo_dict(r));
    }
    return out;
}

py::dict scan_dict(const FringeScan& s)
{
    py::dict d;
    d["phases"] = to_array(s.phases);
    d["signals"] = to_array(s.signals);
    d["signal_std"] = to_array(s.signal_std);
    d["visibility"] = s.fitted.visibility;
    d["visibility_err"] = s.visibility_uncertainty;
    d["phase_offset"] = s.fitted.phase_offset;
    d["mean_level"] = s.fitted.mean_level;
    d["clipped"] = s.clipped;
    return d;
}

}  // namespace

PYBIND11_MODULE(_echomem, m)
{
    m.doc() = "Photon-echo quantum memory simulator. Times in us, detunings and Rabi amplitudes in rad/us.";
    m.attr("__version__") = "0.1.0";
    m.attr("PI") = kPi;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<GridMismatchError>(m, "GridMismatchError", PyExc_ValueError);
    py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_ArithmeticError);
    py::register_exception<FitError>(m, "FitError", PyExc_ValueError);

    m.def("set_thread_count", &set_thread_count, py::arg("n"));
    m.def("thread_count", &thread_count);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<double, double, std::size_t>(), py::arg("t_start"), py::arg("dt"), py::arg("n"))
        .def_property_readonly("t_start", &TimeGrid::t_start)
        .def_property_readonly("t_end", &TimeGrid::t_end)
        .def_property_readonly("dt", &TimeGrid::dt)
        .def("__len__", &TimeGrid::size)
        .def("times",
             [](const TimeGrid& g) {
                 DArray t(static_cast<py::ssize_t>(g.size()));
                 for (std::size_t k = 0; k < g.size(); ++k) {
                     t.mutable_data()[k] = g.time(k);
                 }
                 return t;
             })
        .def("nearest_index", &TimeGrid::nearest_index)
        .def("__repr__", [](const TimeGrid& g) {
            std::ostringstream s;
            s << "TimeGrid(t_start=" << g.t_start() << ", dt=" << g.dt() << ", n=" << g.size() << ")";
            return s.str();
        });
    m.def("build_time_grid", &build_time_grid, py::arg("t_start"), py::arg("t_end"), py::arg("dt"));

    py::enum_<PulseShape>(m, "PulseShape")
        .value("rectangular", PulseShape::rectangular)
        .value("gaussian", PulseShape::gaussian);
    py::enum_<LineKind>(m, "LineKind").value("gaussian", LineKind::gaussian).value("lorentzian", LineKind::lorentzian);

    py::class_<PulseSpec>(m, "PulseSpec")
        .def(py::init([](double center, double duration, double area, PulseShape shape, double phase) {
                 PulseSpec p{center, duration, area, shape, phase};
                 p.validate();
                 return p;
             }),
             py::arg("center"), py::arg("duration") = 0.015, py::arg("area") = 0.0,
             py::arg("shape") = PulseShape::rectangular, py::arg("phase") = 0.0)
        .def_readwrite("center", &PulseSpec::center)
        .def_readwrite("duration", &PulseSpec::duration)
        .def_readwrite("area", &PulseSpec::area)
        .def_readwrite("shape", &PulseSpec::shape)
        .def_readwrite("phase", &PulseSpec::phase);

    py::class_<LineShape>(m, "LineShape")
        .def(py::init([](LineKind kind, double fwhm, double center) { return LineShape{kind, fwhm, center}; }),
             py::arg("kind") = LineKind::gaussian, py::arg("fwhm") = 150.0, py::arg("center") = 0.0)
        .def_readwrite("kind", &LineShape::kind)
        .def_readwrite("fwhm", &LineShape::fwhm)
        .def_readwrite("center", &LineShape::center)
        .def("density", &LineShape::density);

    py::class_<EnsembleSpec>(m, "EnsembleSpec")
        .def(py::init([](double T1, double T2, const LineShape& line, double alpha_l, double n_atoms,
                         double decohered_fraction) {
                 EnsembleSpec e{T1, T2, line, alpha_l, n_atoms, decohered_fraction};
                 e.validate();
                 return e;
             }),
             py::arg("T1") = kInf, py::arg("T2") = kInf, py::arg("line") = LineShape{}, py::arg("alpha_l") = 0.0,
             py::arg("n_atoms") = 1e8, py::arg("decohered_fraction") = 0.0)
        .def_readwrite("T1", &EnsembleSpec::T1)
        .def_readwrite("T2", &EnsembleSpec::T2)
        .def_readwrite("line", &EnsembleSpec::line)
        .def_readwrite("alpha_l", &EnsembleSpec::alpha_l)
        .def_readwrite("n_atoms", &EnsembleSpec::n_atoms)
        .def_readwrite("decohered_fraction", &EnsembleSpec::decohered_fraction);

    py::class_<EchoSequence>(m, "EchoSequence")
        .def(py::init([](std::vector<PulseSpec> data, PulseSpec read) {
                 EchoSequence s{std::move(data), read};
                 s.validate();
                 return s;
             }),
             py::arg("data_pulses"), py::arg("read_pulse"))
        .def_readwrite("data_pulses", &EchoSequence::data_pulses)
        .def_readwrite("read_pulse", &EchoSequence::read_pulse)
        .def("all_pulses", &EchoSequence::all_pulses)
        .def("warnings", &EchoSequence::warnings);

    m.def(
        "sample_pulse", [](const PulseSpec& p, const TimeGrid& g) { return to_array(sample_pulse(p, g)); },
        py::arg("pulse"), py::arg("grid"));
    m.def(
        "superpose", [](const std::vector<PulseSpec>& p, const TimeGrid& g) { return to_array(superpose(p, g)); },
        py::arg("pulses"), py::arg("grid"));
    m.def(
        "envelope_energy", [](const CArray& e, const TimeGrid& g) { return envelope_energy(to_envelope(e, g)); },
        py::arg("envelope"), py::arg("grid"));
    m.def(
        "envelope_area", [](const CArray& e, const TimeGrid& g) { return envelope_area(to_envelope(e, g)); },
        py::arg("envelope"), py::arg("grid"));

    m.def(
        "evolve_atom",
        [](const CArray& drive, const TimeGrid& g, double detuning, double T1, double T2) {
            const auto states = evolve_atom(to_envelope(drive, g), detuning, T1, T2);
            CArray sigma(static_cast<py::ssize_t>(states.size()));
            DArray w(static_cast<py::ssize_t>(states.size()));
            for (std::size_t k = 0; k < states.size(); ++k) {
                sigma.mutable_data()[k] = states[k].coherence;
                w.mutable_data()[k] = states[k].inversion;
            }
            return py::make_tuple(sigma, w);
        },
        py::arg("drive"), py::arg("grid"), py::arg("detuning") = 0.0, py::arg("T1") = kInf, py::arg("T2") = kInf,
        "Single-atom RK4 trajectory from the ground state. Returns (coherence, inversion).");
    m.def(
        "discretize_line",
        [](const LineShape& line, std::size_t n, double span) {
            const auto g = discretize_line(line, n, span);
            return py::make_tuple(to_array(g.detunings), to_array(g.weights));
        },
        py::arg("line"), py::arg("n") = kDefaultQuadraturePoints, py::arg("span") = kDefaultQuadratureSpan);
    m.def(
        "ensemble_polarization",
        [](const CArray& drive, const TimeGrid& g, const DArray& detunings, const DArray& weights, double T1,
           double T2) {
            return to_array(ensemble_polarization(to_envelope(drive, g), make_detunings(detunings, weights), T1, T2));
        },
        py::arg("drive"), py::arg("grid"), py::arg("detunings"), py::arg("weights"), py::arg("T1") = kInf,
        py::arg("T2") = kInf);

    m.def("minimum_slices", &minimum_slices, py::arg("alpha_l"));
    m.def(
        "propagate",
        [](const CArray& input, const TimeGrid& g, const EnsembleSpec& ensemble, std::size_t points, double span,
           std::size_t n_slices) {
            const auto dg = discretize_line(ensemble.line, points, span);
            const auto medium = make_medium(ensemble, dg, n_slices);
            return to_array(propagate_maxwell_bloch(to_envelope(input, g), medium, dg));
        },
        py::arg("input"), py::arg("grid"), py::arg("ensemble"), py::arg("points") = kDefaultQuadraturePoints,
        py::arg("span") = kDefaultQuadratureSpan, py::arg("n_slices") = 0,
        "Maxwell-Bloch propagation through a medium calibrated to ensemble.alpha_l.");

    m.def("predict_echo_times", &predict_echo_times, py::arg("sequence"));
    m.def("default_half_width", &default_half_width, py::arg("sequence"));
    m.def(
        "extract_echoes",
        [](const CArray& trace, const TimeGrid& g, const EchoSequence& seq, double half_width) {
            return echo_list(extract_echoes(to_envelope(trace, g), seq, half_width));
        },
        py::arg("trace"), py::arg("grid"), py::arg("sequence"), py::arg("half_width"));
    m.def(
        "fit_decay",
        [](const std::vector<double>& ts, const std::vector<double>& intensities) {
            const auto f = fit_decay(ts, intensities);
            py::dict d;
            d["T2"] = f.t2;
            d["amplitude0"] = f.amplitude0;
            d["r_squared"] = f.r_squared;
            return d;
        },
        py::arg("storage_times"), py::arg("intensities"));
    m.def("small_area_echo_oracle", &small_area_echo_oracle, py::arg("theta1"), py::arg("theta2"), py::arg("t12"),
          py::arg("T2"));

    m.def(
        "overlap_visibility",
        [](const CArray& e1, const CArray& e2, const TimeGrid& g) {
            return overlap_visibility(to_envelope(e1, g), to_envelope(e2, g));
        },
        py::arg("e1"), py::arg("e2"), py::arg("grid"));
    m.def(
        "fit_fringe",
        [](std::vector<double> phases, std::vector<double> signals, std::optional<std::vector<double>> std_dev) {
            const std::size_t n = phases.size();
            return scan_dict(fit_fringe(std::move(phases), std::move(signals),
                                        std_dev ? std::move(*std_dev) : std::vector<double>(n, 0.0)));
        },
        py::arg("phases"), py::arg("signals"), py::arg("signal_std") = py::none());
    m.def(
        "scan_fringe",
        [](const CArray& e1, const CArray& e2, const TimeGrid& g, const std::vector<double>& phases, double sigma,
           std::size_t shots, std::uint64_t seed) {
            PhaseNoiseSpec noise{sigma, shots, seed};
            noise.validate();
            return scan_dict(scan_fringe(to_envelope(e1, g), to_envelope(e2, g), phases, noise));
        },
        py::arg("e1"), py::arg("e2"), py::arg("grid"), py::arg("phases"), py::arg("sigma") = 0.0,
        py::arg("shots_per_point") = 1, py::arg("seed") = 0);
    m.def("expected_noise_visibility", &expected_noise_visibility, py::arg("sigma"));
    m.def("collective_snr", &collective_snr, py::arg("n_atoms"), py::arg("n_decohered"));
    m.def("phase_range", &phase_range, py::arg("start"), py::arg("span"), py::arg("count"));

    m.def(
        "validate_config",
        [](const std::filesystem::path& path, std::optional<std::string> subcommand) {
            std::optional<Subcommand> cmd;
            if (subcommand) {
                cmd = parse_subcommand(*subcommand);
            }
            const auto r = validate_config(path, cmd);
            return py::make_tuple(r.violations, r.warnings);
        },
        py::arg("path"), py::arg("subcommand") = py::none(), "Returns (violations, warnings).");
    m.def(
        "run_echo",
        [](const std::filesystem::path& path) {
            const auto run = run_echo(load_config(path));
            py::dict d;
            d["grid"] = run.arm.input.grid();
            d["input"] = to_array(run.arm.input);
            d["output"] = to_array(run.arm.output);
            d["echoes"] = echo_list(run.arm.echoes);
            return d;
        },
        py::arg("config"));
    m.def(
        "run_fringe",
        [](const std::filesystem::path& path) {
            const auto result = run_fringe(load_config(path));
            py::list modes;
            for (const auto& mr : result.modes) {
                auto d = scan_dict(mr.scan);
                d["mode_index"] = mr.mode_index;
                d["storage_time"] = mr.storage_time;
                d["energy_arm1"] = mr.energy_arm1;
                d["energy_arm2"] = mr.energy_arm2;
                d["overlap_visibility"] = mr.overlap_visibility;
                modes.append(d);
            }
            return modes;
        },
        py::arg("config"), "One dict per echo mode, sorted by echo time.");
    m.def(
        "run_decay",
        [](const std::filesystem::path& path) {
            const auto run = run_decay(load_config(path));
            py::list points;
            for (const auto& p : run.points) {
                py::dict d;
                d["storage_time"] = p.storage_time;
                d["energy_arm1"] = p.energy_arm1;
                d["energy_arm2"] = p.energy_arm2;
                d["visibility"] = p.visibility;
                d["visibility_err"] = p.visibility_err;
                points.append(d);
            }
            py::dict d;
            d["points"] = points;
            d["T2_arm1"] = run.fit_arm1.t2;
            d["T2_arm2"] = run.fit_arm2.t2;
            return d;
        },
        py::arg("config"));
    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process. Returns (exit_code, stdout, stderr).");
}
