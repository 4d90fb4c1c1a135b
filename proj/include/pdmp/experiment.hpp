#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/morris_lecar.hpp"
#include "pdmp/simulate.hpp"

namespace pdmp {

// Parsed experiment file: flat key = value lines under [section] headers.
// Sections: [scenario], [morris_lecar], [model], [sweep], [clt], [trace].
// Values explicitly present in the file override the scenario defaults; the
// optionals below record what was set.
struct SimOverrides {
    std::optional<int> mode_count;
    std::optional<double> horizon;
    std::optional<double> h_max;
    std::optional<double> langevin_h;
    std::optional<double> epsilon;
    std::optional<bool> mollified;
    std::optional<double> kappa;
    std::optional<int> output_points;
    std::optional<double> hnorm_bound;
    std::optional<bool> frozen_u;
};

struct ExperimentConfig {
    std::string scenario_name = "morris_lecar";
    MLParameters ml;
    std::optional<Scenario> custom;  // [model] section, scenario_name "custom"

    ProcessKind mode = ProcessKind::Full;
    SimOverrides sim;
    std::vector<double> probes = {0.25, 0.5, 0.75};  // trajectory CSV sample points

    std::vector<double> sweep_epsilons = {1.0, 0.1, 0.01, 0.001};  // 0 = averaged
    int sweep_replicas = 100;

    double clt_t = 1.0;
    double clt_epsilon = 1e-3;
    int clt_replicas = 10000;

    std::optional<double> trace_horizon;
    std::optional<int> trace_output_points;

    std::uint64_t seed = 1;
    int threads = 1;  // worker pool size; 0 = hardware concurrency
};

ExperimentConfig parse_config_file(const std::string& path);
// origin is used in error messages ("origin:line: ...")
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// scenario + simulation settings with file overrides applied
struct ResolvedExperiment {
    Scenario scenario;
    SimConfig sim;
};
ResolvedExperiment resolve_experiment(const ExperimentConfig& cfg);

// shortest round-trip decimal form, identical across runs
std::string csv_number(double x);

// header: t, u@x1.., open_fraction_0.., njumps_cum[, noise_energy]
void write_trajectory_csv(const HybridSimulator& sim, const Trajectory& traj,
                          const std::vector<double>& probes, bool with_noise_energy,
                          std::ostream& out);

struct SweepRow {
    double epsilon;  // 0 denotes the averaged reference itself
    double mean_sup_err;
    double stderr_mean;
    int replicas;
};
// paired replicas: for each replica the jump-thinning stream is shared across
// all epsilon values and compared against one common averaged reference
std::vector<SweepRow> run_epsilon_sweep(const ExperimentConfig& cfg, std::ostream& csv);

struct CltRow {
    int channel;
    double t;
    double empirical_var;
    double predicted_var;
    double ratio;
    double ci_low;
    double ci_high;
};
// frozen-field check of Var(eps^{-1/2} int_0^t d(r_s) ds) against t * 2 s_i;
// requires a single-class model (the per-class corrector has no meaning once
// the chain hops classes)
std::vector<CltRow> run_clt_check(const ExperimentConfig& cfg, std::ostream& csv);

struct TraceRow {
    double t;
    double trace;
    double tail_bound;
    double paper_bound;  // NaN outside the Morris-Lecar scenario
};
std::vector<TraceRow> run_trace_series(const ExperimentConfig& cfg, std::ostream& csv);
void write_trace_svg(const std::vector<TraceRow>& rows, std::ostream& svg);

struct PhiCheckReport {
    int instances = 0;
    double max_rel_gap = 0.0;       // linear vs integral representation
    double max_fredholm = 0.0;      // ||B phi + d||_inf
    double max_centering = 0.0;     // |mu . phi|
    double max_closed_form_gap = 0.0;  // closed-form table vs generic solve
    int worst_instance = -1;
    bool pass = false;
};
PhiCheckReport run_phi_check(std::uint64_t seed, std::ostream& report);

// bounded worker pool; body(i) for i in [0, n); first exception rethrown
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace pdmp
