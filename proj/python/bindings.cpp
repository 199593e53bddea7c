#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "labyrinth/analysis.hpp"
#include "labyrinth/cli.hpp"
#include "labyrinth/config.hpp"
#include "labyrinth/io.hpp"
#include "labyrinth/pipeline.hpp"

namespace py = pybind11;
using namespace labyrinth;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (n, 7) rows of t x y z vx vy vz
Array samples_array(const Trajectory& t) {
    Array out({static_cast<py::ssize_t>(t.samples.size()), py::ssize_t{7}});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        const AtomState& s = t.samples[i];
        a(i, 0) = s.time;
        for (int k = 0; k < 3; ++k) {
            a(i, 1 + k) = s.position[k];
            a(i, 4 + k) = s.velocity[k];
        }
    }
    return out;
}

Trajectory from_array(const Array& rows, double sample_interval) {
    if (rows.ndim() != 2 || rows.shape(1) != 7) throw std::invalid_argument("samples must have shape (n, 7)");
    auto a = rows.unchecked<2>();
    Trajectory t;
    t.sample_interval = sample_interval;
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        t.samples.push_back({Vec3(a(i, 1), a(i, 2), a(i, 3)), Vec3(a(i, 4), a(i, 5), a(i, 6)), a(i, 0)});
    t.horizon = t.duration();
    return t;
}

py::object as_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

std::vector<double> as_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

}  // namespace

PYBIND11_MODULE(_labyrinth, m) {
    m.doc() = "Atom trajectories in a parabolic optical lattice";
    m.attr("__version__") = LABYRINTH_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_ValueError);
    py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);

    py::enum_<Parity>(m, "Parity").value("even", Parity::even).value("odd", Parity::odd);
    py::enum_<ForceLaw>(m, "ForceLaw")
        .value("full", ForceLaw::full)
        .value("simple", ForceLaw::simple)
        .value("dipole_only", ForceLaw::dipole_only);

    py::class_<RunConfig>(m, "Config")
        .def(py::init<>())
        .def_static("parse", &parse_config, py::arg("text"))
        .def_static("load", &load_config, py::arg("path"))
        .def("text", &serialize_config)
        .def("hash", [](const RunConfig& c) { return hash_hex(config_hash(c)); })
        .def("validate", &RunConfig::validate)
        .def_readwrite("irradiance_kw_cm2", &RunConfig::irradiance_kw_cm2)
        .def_readwrite("a", &RunConfig::a)
        .def_readwrite("force_law", &RunConfig::force_law)
        .def_readwrite("grid_half_width", &RunConfig::grid_half_width)
        .def_readwrite("grid_points", &RunConfig::grid_points)
        .def_readwrite("grid_tile", &RunConfig::grid_tile)
        .def_readwrite("n_atoms", &RunConfig::n_atoms)
        .def_readwrite("disk_radius", &RunConfig::disk_radius)
        .def_readwrite("t_final", &RunConfig::t_final)
        .def_readwrite("horizon", &RunConfig::horizon)
        .def_readwrite("sample_interval", &RunConfig::sample_interval)
        .def_readwrite("radial_bound", &RunConfig::radial_bound)
        .def_readwrite("min_spectrum_samples", &RunConfig::min_spectrum_samples)
        .def_readwrite("irradiances_kw_cm2", &RunConfig::irradiances_kw_cm2)
        .def_readwrite("seed", &RunConfig::seed)
        .def(py::self == py::self);

    py::class_<BeamField, std::shared_ptr<BeamField>>(m, "Beam")
        .def(py::init([](Parity parity, double a, double kz_ratio) {
                 return std::make_shared<BeamField>(
                     FieldMode::from_ratio(kz_ratio, parity, a, 1.0, SimUnits{}.light_speed()));
             }),
             py::arg("parity") = Parity::even, py::arg("a") = 0.0, py::arg("kz_ratio") = 0.975)
        .def_property_readonly("k_perp", [](const BeamField& b) { return b.mode().k_perp; })
        .def("psi", &BeamField::scalar_mode, py::arg("x"), py::arg("y"))
        .def("grad_psi", &BeamField::scalar_mode_gradient, py::arg("x"), py::arg("y"))
        .def("te_field", &BeamField::te_field, py::arg("x"), py::arg("y"), py::arg("z"), py::arg("t") = 0.0,
             py::arg("standing") = true)
        .def_property_readonly("peak_location", &BeamField::peak_location)
        .def_property_readonly("peak_unit_gradient", &BeamField::peak_unit_gradient);

    py::class_<Lattice>(m, "Lattice")
        .def(py::init(&Lattice::build), py::arg("config"), py::call_guard<py::gil_scoped_release>())
        .def_readonly("config", &Lattice::config)
        .def_property_readonly("gravity", [](const Lattice& l) { return l.physics.gravity; })
        .def_property_readonly("detuning", [](const Lattice& l) { return l.physics.detuning; })
        .def("peak_saturation", &peak_saturation, py::arg("irradiance_kw_cm2"))
        .def(
            "saturation",
            [](const Lattice& l, double irr, double x, double y, double z) {
                const Environment env = l.environment(irr);
                return saturation(env.field->sample(Vec3(x, y, z)), env.params.detuning, env.params.gamma);
            },
            py::arg("irradiance_kw_cm2"), py::arg("x"), py::arg("y"), py::arg("z") = 0.0)
        .def(
            "force",
            [](const Lattice& l, double irr, const Vec3& r, const Vec3& v, ForceLaw law) {
                Environment env = l.environment(irr);
                env.law = law;
                return Vec3(env.acceleration(r, v) * env.mass);
            },
            py::arg("irradiance_kw_cm2"), py::arg("position"), py::arg("velocity"), py::arg("law") = ForceLaw::full)
        .def(
            "initial_state",
            [](const Lattice& l, std::uint64_t atom) {
                const AtomState s =
                    sample_initial_condition(l.ensemble_spec(), l.physics.units, l.physics.mass, atom);
                return py::make_tuple(s.position, s.velocity);
            },
            py::arg("atom"))
        .def(
            "trajectory",
            [](const Lattice& l, double irr, std::uint64_t atom, double t_final) {
                const Environment env = l.environment(irr);
                const EnsembleSpec spec = l.ensemble_spec();
                IntegratorOptions opt = l.integrator_options();
                opt.escape = make_escape_predicate(l.criteria(), spec.z0);
                const AtomState s0 = sample_initial_condition(spec, l.physics.units, l.physics.mass, atom);
                Trajectory t;
                {
                    py::gil_scoped_release release;
                    t = integrate(s0, env, t_final > 0 ? t_final : l.config.t_final, l.config.sample_interval, opt);
                }
                return samples_array(t);
            },
            py::arg("irradiance_kw_cm2"), py::arg("atom"), py::arg("t_final") = 0.0)
        .def(
            "simulate",
            [](const Lattice& l, double irr, int threads) {
                std::vector<AtomResult> atoms;
                {
                    py::gil_scoped_release release;
                    atoms = run_ensemble(l.environment(irr), l.ensemble_spec(), l.criteria(), l.physics.units,
                                         l.run_options(threads));
                }
                return as_python(to_json(summarize(irr, std::move(atoms)), true));
            },
            py::arg("irradiance_kw_cm2"), py::arg("threads") = 1)
        .def(
            "lobe_at", [](const Lattice& l, double x, double y) { return l.lobes->lobe_at(x, y); }, py::arg("x"),
            py::arg("y"))
        .def(
            "lobe_events",
            [](const Lattice& l, const Array& samples) {
                py::list out;
                for (const LobeEvent& e :
                     lobe_events(from_array(samples, l.config.sample_interval), *l.lobes, l.config.hysteresis))
                    out.append(py::make_tuple(e.lobe_id, e.entry_time, e.exit_time));
                return out;
            },
            py::arg("samples"));

    m.def(
        "power_spectrum",
        [](const Array& times, const Array& values, std::size_t min_samples) {
            SpectrumOptions opt;
            opt.min_samples = min_samples;
            const PowerSpectrum s = power_spectrum(as_vector(times), as_vector(values), opt);
            return py::make_tuple(Array(s.frequency.size(), s.frequency.data()), Array(s.power.size(), s.power.data()));
        },
        py::arg("times"), py::arg("values"), py::arg("min_samples") = 4096);
    m.def(
        "classify_motion",
        [](const Array& times, const Array& values, std::size_t min_samples) {
            SpectrumOptions opt;
            opt.min_samples = min_samples;
            const MotionClassification c = classify_motion(power_spectrum(as_vector(times), as_vector(values), opt));
            py::dict d;
            d["label"] = to_string(c.label);
            d["flatness"] = c.flatness;
            d["peak_fraction"] = c.peak_fraction;
            return d;
        },
        py::arg("times"), py::arg("values"), py::arg("min_samples") = 4096);
    m.def(
        "permanency_histogram",
        [](const Array& dwells, double bin_width) {
            const PermanencyHistogram h = permanency_histogram(as_vector(dwells), bin_width);
            py::dict d;
            d["counts"] = h.counts;
            d["total"] = h.total;
            d["longest_dwell"] = h.longest_dwell;
            d["slope"] = h.slope;
            d["r_squared"] = h.r_squared;
            return d;
        },
        py::arg("dwells"), py::arg("bin_width") = 50.0);
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
