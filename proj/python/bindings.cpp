#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pdmp/errors.hpp"
#include "pdmp/experiment.hpp"

namespace py = pybind11;
using namespace pdmp;

namespace {

std::shared_ptr<const SpectralBasis> sine(int mode_count) {
    return SpectralBasis::dirichlet_sine(mode_count);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "spectral Galerkin simulator for slow-fast stochastic neuron models";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<InvariantError>(m, "InvariantError");
    py::register_exception<BlowUpError>(m, "BlowUpError");

    // kinetics
    py::class_<RateForm>(m, "RateForm")
        .def_static("zero", &RateForm::zero)
        .def_static("constant", &RateForm::constant)
        .def_static("ml_open", &RateForm::ml_open, py::arg("lambda_w"), py::arg("v3"),
                    py::arg("v4"), py::arg("floor") = 1e-4)
        .def_static("ml_close", &RateForm::ml_close, py::arg("lambda_w"), py::arg("v3"),
                    py::arg("v4"), py::arg("floor") = 1e-4)
        .def("is_zero", &RateForm::is_zero)
        .def("__call__", &RateForm::operator());

    py::class_<ChannelModel>(m, "ChannelModel")
        .def(py::init<std::vector<std::string>, std::vector<int>, Eigen::VectorXd,
                      Eigen::VectorXd, std::vector<RateForm>, double, double>(),
             py::arg("state_names"), py::arg("state_class"), py::arg("conductance"),
             py::arg("reversal"), py::arg("rates"), py::arg("alpha_min"), py::arg("alpha_max"))
        .def("n_states", &ChannelModel::n_states)
        .def("n_classes", &ChannelModel::n_classes)
        .def("class_of", &ChannelModel::class_of)
        .def("states_in_class", &ChannelModel::states_in_class)
        .def("state_name", &ChannelModel::state_name)
        .def("conductance", &ChannelModel::conductance)
        .def("reversal", &ChannelModel::reversal)
        .def("alpha_min", &ChannelModel::alpha_min)
        .def("alpha_max", &ChannelModel::alpha_max)
        .def("rate_value", &ChannelModel::rate_value)
        .def("validate", &ChannelModel::validate, py::arg("y_lo") = -120.0,
             py::arg("y_hi") = 60.0, py::arg("step") = 0.5);

    py::class_<GeneratorMatrix>(m, "GeneratorMatrix")
        .def_readonly("Q", &GeneratorMatrix::Q)
        .def_readonly("voltage", &GeneratorMatrix::voltage)
        .def_readonly("states", &GeneratorMatrix::states);

    py::class_<QuasiStationary>(m, "QuasiStationary")
        .def_readonly("p", &QuasiStationary::p)
        .def_readonly("residual", &QuasiStationary::residual);

    m.def("generator_matrix", &generator_matrix);
    m.def("full_generator", &full_generator);
    m.def("aggregated_generator", &aggregated_generator);
    m.def("quasi_stationary", &quasi_stationary);
    m.def("averaged_rate", &averaged_rate);

    // geometry / basis helpers (sine family only)
    m.def("sine_eigenvalues",
          [](int mode_count) { return sine(mode_count)->eigenvalues(); });
    m.def(
        "sine_values",
        [](int mode_count, double x) { return sine(mode_count)->evaluate_all(x); },
        py::arg("mode_count"), py::arg("x"));

    py::class_<ChannelLayout>(m, "ChannelLayout")
        .def(py::init<>())
        .def_readwrite("positions", &ChannelLayout::positions)
        .def_readwrite("weights", &ChannelLayout::weights)
        .def_static("regular", &ChannelLayout::regular)
        .def("size", &ChannelLayout::size);

    py::class_<SourceGeometry>(m, "SourceGeometry")
        .def_readonly("W", &SourceGeometry::W)
        .def_readonly("mollified", &SourceGeometry::mollified)
        .def_readonly("kappa", &SourceGeometry::kappa)
        .def_readonly("source_norms", &SourceGeometry::source_norms)
        .def("n_channels", &SourceGeometry::n_channels)
        .def("n_modes", &SourceGeometry::n_modes);

    m.def(
        "pointlike_geometry",
        [](int mode_count, const ChannelLayout& layout) {
            return SourceGeometry::pointlike(sine(mode_count), layout);
        },
        py::arg("mode_count"), py::arg("layout"));
    m.def(
        "mollified_geometry",
        [](int mode_count, const ChannelLayout& layout, double kappa) {
            return SourceGeometry::make_mollified(sine(mode_count), layout, kappa);
        },
        py::arg("mode_count"), py::arg("layout"), py::arg("kappa"));

    // fluctuation layer
    py::class_<ChannelPoisson>(m, "ChannelPoisson")
        .def_readonly("mu", &ChannelPoisson::mu)
        .def_readonly("d", &ChannelPoisson::d)
        .def_readonly("phi", &ChannelPoisson::phi)
        .def_readonly("s", &ChannelPoisson::s);

    m.def("solve_channel", &solve_channel, py::arg("model"), py::arg("cls"), py::arg("y"));
    m.def(
        "solve_phi_linear",
        [](const GeneratorMatrix& gen, const Eigen::VectorXd& d) {
            return solve_phi_linear(gen, d, quasi_stationary(gen));
        },
        py::arg("generator"), py::arg("d"));
    m.def(
        "solve_phi_integral",
        [](const GeneratorMatrix& gen, const Eigen::VectorXd& d) {
            return solve_phi_integral(gen, d);
        },
        py::arg("generator"), py::arg("d"));
    m.def("channel_variance", &channel_variance);

    py::class_<DiffusionOperator>(m, "DiffusionOperator")
        .def_readonly("a", &DiffusionOperator::a)
        .def_readonly("factor", &DiffusionOperator::factor)
        .def_readonly("s", &DiffusionOperator::s)
        .def("paper", &DiffusionOperator::paper);

    m.def("diffusion_matrix", &diffusion_matrix, py::arg("coeffs"), py::arg("classes"),
          py::arg("model"), py::arg("geometry"));
    m.def("trace_diag", &trace_diag);

    py::class_<TraceResult>(m, "TraceResult")
        .def_readonly("value", &TraceResult::value)
        .def_readonly("tail_bound", &TraceResult::tail_bound);

    m.def(
        "trace_Q",
        [](const Eigen::VectorXd& times, const std::vector<Eigen::VectorXd>& diag, double t,
           double nu, int mode_count, double sup_diag_bound) {
            return trace_Q(times, diag, t, nu, *sine(mode_count), sup_diag_bound);
        },
        py::arg("times"), py::arg("diag"), py::arg("t"), py::arg("nu"), py::arg("mode_count"),
        py::arg("sup_diag_bound") = 0.0);

    // scenario and engine
    py::class_<Stimulus>(m, "Stimulus")
        .def(py::init<>())
        .def_readwrite("strength", &Stimulus::strength)
        .def_readwrite("x0", &Stimulus::x0)
        .def_readwrite("x1", &Stimulus::x1);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("model", &Scenario::model)
        .def_readwrite("layout", &Scenario::layout)
        .def_readwrite("stimulus", &Scenario::stimulus)
        .def_readwrite("diffusion", &Scenario::diffusion)
        .def_readwrite("capacitance", &Scenario::capacitance)
        .def_readwrite("initial_coeffs", &Scenario::initial_coeffs)
        .def_readwrite("initial_states", &Scenario::initial_states);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("mode_count", &SimConfig::mode_count)
        .def_readwrite("horizon", &SimConfig::horizon)
        .def_readwrite("h_max", &SimConfig::h_max)
        .def_readwrite("langevin_h", &SimConfig::langevin_h)
        .def_readwrite("epsilon", &SimConfig::epsilon)
        .def_readwrite("mollified", &SimConfig::mollified)
        .def_readwrite("kappa", &SimConfig::kappa)
        .def_readwrite("output_points", &SimConfig::output_points)
        .def_readwrite("hnorm_bound", &SimConfig::hnorm_bound)
        .def_readwrite("frozen_u", &SimConfig::frozen_u)
        .def_readwrite("record_jumps", &SimConfig::record_jumps);

    py::class_<JumpEvent>(m, "JumpEvent")
        .def_readonly("t", &JumpEvent::t)
        .def_readonly("channel", &JumpEvent::channel)
        .def_readonly("from_state", &JumpEvent::from)
        .def_readonly("to_state", &JumpEvent::to);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("coeffs", &Trajectory::coeffs)
        .def_readonly("open_fraction", &Trajectory::open_fraction)
        .def_readonly("njumps_cum", &Trajectory::njumps_cum)
        .def_readonly("noise_energy", &Trajectory::noise_energy)
        .def_readonly("jumps", &Trajectory::jumps)
        .def_readonly("final_states", &Trajectory::final_states)
        .def_readonly("seed", &Trajectory::seed)
        .def_readonly("stream", &Trajectory::stream)
        .def_readonly("sup_hnorm", &Trajectory::sup_hnorm)
        .def_readonly("hnorm_flag", &Trajectory::hnorm_flag);

    py::enum_<ProcessKind>(m, "ProcessKind")
        .value("Full", ProcessKind::Full)
        .value("Averaged", ProcessKind::Averaged)
        .value("Langevin", ProcessKind::Langevin);

    py::class_<HybridSimulator>(m, "HybridSimulator")
        .def(py::init<Scenario, SimConfig>(), py::arg("scenario"), py::arg("config"))
        .def("run_pdmp", &HybridSimulator::run_pdmp, py::arg("seed"), py::arg("stream") = 0,
             py::call_guard<py::gil_scoped_release>())
        .def("run_averaged", &HybridSimulator::run_averaged, py::arg("seed"),
             py::arg("stream") = 0, py::call_guard<py::gil_scoped_release>())
        .def("run_langevin", &HybridSimulator::run_langevin, py::arg("seed"),
             py::arg("stream") = 0, py::call_guard<py::gil_scoped_release>())
        .def("hnorm_bound", &HybridSimulator::hnorm_bound)
        .def("majorant", &HybridSimulator::majorant)
        .def("basis_values",
             [](const HybridSimulator& s, double x) { return s.basis()->evaluate_all(x); });

    // Morris-Lecar scenario
    py::class_<MLParameters>(m, "MLParameters")
        .def(py::init<>())
        .def_readwrite("C", &MLParameters::C)
        .def_readwrite("c_K", &MLParameters::c_K)
        .def_readwrite("v_K", &MLParameters::v_K)
        .def_readwrite("c_Ca", &MLParameters::c_Ca)
        .def_readwrite("v_Ca", &MLParameters::v_Ca)
        .def_readwrite("a", &MLParameters::a)
        .def_readwrite("R", &MLParameters::R)
        .def_readwrite("N_K", &MLParameters::N_K)
        .def_readwrite("N_Ca", &MLParameters::N_Ca)
        .def_readwrite("length", &MLParameters::length)
        .def_readwrite("horizon", &MLParameters::horizon)
        .def_readwrite("stim_strength", &MLParameters::stim_strength)
        .def_readwrite("stim_x0", &MLParameters::stim_x0)
        .def_readwrite("stim_x1", &MLParameters::stim_x1)
        .def_readwrite("lambda_K", &MLParameters::lambda_K)
        .def_readwrite("v3_K", &MLParameters::v3_K)
        .def_readwrite("v4_K", &MLParameters::v4_K)
        .def_readwrite("lambda_Ca", &MLParameters::lambda_Ca)
        .def_readwrite("v3_Ca", &MLParameters::v3_Ca)
        .def_readwrite("v4_Ca", &MLParameters::v4_Ca)
        .def_readwrite("rate_floor", &MLParameters::rate_floor)
        .def("nu_eff", &MLParameters::nu_eff);

    py::class_<MLModel>(m, "MLModel")
        .def_readonly("params", &MLModel::params)
        .def_readonly("scenario", &MLModel::scenario)
        .def_readonly("config", &MLModel::config);

    m.def("ml_model", &ml_model, py::arg("params") = MLParameters{});
    m.def("ml_channel_model", &ml_channel_model);
    m.def("ml_phi_table", &ml_phi_table);
    m.def("ml_phi_closed_form", &ml_phi_closed_form);
    m.def(
        "ml_diffusion_closed_form",
        [](const MLParameters& p, const SourceGeometry& geom, const Eigen::VectorXd& coeffs) {
            return ml_diffusion_closed_form(p, geom, coeffs);
        },
        py::arg("params"), py::arg("geometry"), py::arg("coeffs"));
    m.def("ml_variance_sup", &ml_variance_sup);
    m.def("ml_trace_bound", &ml_trace_bound);

    // experiment layer
    py::class_<SimOverrides>(m, "SimOverrides")
        .def(py::init<>())
        .def_readwrite("mode_count", &SimOverrides::mode_count)
        .def_readwrite("horizon", &SimOverrides::horizon)
        .def_readwrite("h_max", &SimOverrides::h_max)
        .def_readwrite("langevin_h", &SimOverrides::langevin_h)
        .def_readwrite("epsilon", &SimOverrides::epsilon)
        .def_readwrite("mollified", &SimOverrides::mollified)
        .def_readwrite("kappa", &SimOverrides::kappa)
        .def_readwrite("output_points", &SimOverrides::output_points)
        .def_readwrite("hnorm_bound", &SimOverrides::hnorm_bound)
        .def_readwrite("frozen_u", &SimOverrides::frozen_u);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("scenario_name", &ExperimentConfig::scenario_name)
        .def_readwrite("ml", &ExperimentConfig::ml)
        .def_readwrite("custom", &ExperimentConfig::custom)
        .def_readwrite("mode", &ExperimentConfig::mode)
        .def_readwrite("sim", &ExperimentConfig::sim)
        .def_readwrite("probes", &ExperimentConfig::probes)
        .def_readwrite("sweep_epsilons", &ExperimentConfig::sweep_epsilons)
        .def_readwrite("sweep_replicas", &ExperimentConfig::sweep_replicas)
        .def_readwrite("clt_t", &ExperimentConfig::clt_t)
        .def_readwrite("clt_epsilon", &ExperimentConfig::clt_epsilon)
        .def_readwrite("clt_replicas", &ExperimentConfig::clt_replicas)
        .def_readwrite("trace_horizon", &ExperimentConfig::trace_horizon)
        .def_readwrite("trace_output_points", &ExperimentConfig::trace_output_points)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("threads", &ExperimentConfig::threads);

    m.def("parse_config_file", &parse_config_file);
    m.def("parse_config_text", &parse_config_text, py::arg("text"),
          py::arg("origin") = "<memory>");

    py::class_<ResolvedExperiment>(m, "ResolvedExperiment")
        .def_readonly("scenario", &ResolvedExperiment::scenario)
        .def_readonly("sim", &ResolvedExperiment::sim);
    m.def("resolve_experiment", &resolve_experiment);

    m.def("csv_number", &csv_number);
    m.def(
        "trajectory_csv",
        [](const HybridSimulator& sim, const Trajectory& traj,
           const std::vector<double>& probes, bool with_noise_energy) {
            std::ostringstream out;
            write_trajectory_csv(sim, traj, probes, with_noise_energy, out);
            return out.str();
        },
        py::arg("simulator"), py::arg("trajectory"), py::arg("probes"),
        py::arg("with_noise_energy") = false);

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("epsilon", &SweepRow::epsilon)
        .def_readonly("mean_sup_err", &SweepRow::mean_sup_err)
        .def_readonly("stderr_mean", &SweepRow::stderr_mean)
        .def_readonly("replicas", &SweepRow::replicas);

    m.def(
        "run_epsilon_sweep",
        [](const ExperimentConfig& cfg) {
            std::ostringstream csv;
            std::vector<SweepRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_epsilon_sweep(cfg, csv);
            }
            return py::make_tuple(rows, csv.str());
        },
        py::arg("config"));

    py::class_<CltRow>(m, "CltRow")
        .def_readonly("channel", &CltRow::channel)
        .def_readonly("t", &CltRow::t)
        .def_readonly("empirical_var", &CltRow::empirical_var)
        .def_readonly("predicted_var", &CltRow::predicted_var)
        .def_readonly("ratio", &CltRow::ratio)
        .def_readonly("ci_low", &CltRow::ci_low)
        .def_readonly("ci_high", &CltRow::ci_high);

    m.def(
        "run_clt_check",
        [](const ExperimentConfig& cfg) {
            std::ostringstream csv;
            std::vector<CltRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_clt_check(cfg, csv);
            }
            return py::make_tuple(rows, csv.str());
        },
        py::arg("config"));

    py::class_<TraceRow>(m, "TraceRow")
        .def_readonly("t", &TraceRow::t)
        .def_readonly("trace", &TraceRow::trace)
        .def_readonly("tail_bound", &TraceRow::tail_bound)
        .def_readonly("paper_bound", &TraceRow::paper_bound);

    m.def(
        "run_trace_series",
        [](const ExperimentConfig& cfg) {
            std::ostringstream csv;
            std::vector<TraceRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_trace_series(cfg, csv);
            }
            return py::make_tuple(rows, csv.str());
        },
        py::arg("config"));

    m.def("trace_svg", [](const std::vector<TraceRow>& rows) {
        std::ostringstream svg;
        write_trace_svg(rows, svg);
        return svg.str();
    });

    py::class_<PhiCheckReport>(m, "PhiCheckReport")
        .def_readonly("instances", &PhiCheckReport::instances)
        .def_readonly("max_rel_gap", &PhiCheckReport::max_rel_gap)
        .def_readonly("max_fredholm", &PhiCheckReport::max_fredholm)
        .def_readonly("max_centering", &PhiCheckReport::max_centering)
        .def_readonly("max_closed_form_gap", &PhiCheckReport::max_closed_form_gap)
        .def_readonly("worst_instance", &PhiCheckReport::worst_instance)
        .def_readonly("passed", &PhiCheckReport::pass);

    m.def(
        "run_phi_check",
        [](std::uint64_t seed) {
            std::ostringstream text;
            PhiCheckReport rep;
            {
                py::gil_scoped_release release;
                rep = run_phi_check(seed, text);
            }
            return py::make_tuple(rep, text.str());
        },
        py::arg("seed"));
}
