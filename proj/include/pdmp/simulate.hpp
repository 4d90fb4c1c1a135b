#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "pdmp/fluctuation.hpp"
#include "pdmp/geometry.hpp"
#include "pdmp/kinetics.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/spectral.hpp"

namespace pdmp {

// rectangular stimulus I(x,t) = strength * 1_{[x0,x1]}(x)
struct Stimulus {
    double strength = 0.0;
    double x0 = 0.0;
    double x1 = 0.0;
};

// Physical problem: channel model, sites, stimulus, diffusion coefficient nu
// (the analysis normalizes nu = 1; scenario rescalings land here), membrane
// capacitance C dividing all currents, and the initial condition.
struct Scenario {
    ChannelModel model;
    ChannelLayout layout;  // raw per-channel weights, before the 1/C factor
    Stimulus stimulus;
    double diffusion = 1.0;
    double capacitance = 1.0;
    Eigen::VectorXd initial_coeffs;   // f-basis; empty = zero field
    std::vector<int> initial_states;  // empty = all channels in state 0
};

struct SimConfig {
    int mode_count = 64;
    double horizon = 1.0;
    double h_max = 1e-4;       // flow substep cap (pdmp / averaged)
    double langevin_h = 1e-4;  // EM step (langevin)
    double epsilon = 1e-3;     // fast timescale (pdmp) / noise scale (langevin)
    bool mollified = false;
    double kappa = 0.02;
    int output_points = 200;
    double hnorm_bound = 0.0;  // 0 = derived from scenario constants
    bool frozen_u = false;     // disable the flow (occupancy / CLT checks)
    bool record_jumps = true;
};

struct HybridState {
    double t = 0.0;
    Eigen::VectorXd coeffs;  // f-basis
    std::vector<int> r;      // per-channel state in E, or class for averaged
};

struct JumpEvent {
    double t;
    int channel;
    int from;
    int to;
};

struct Trajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd coeffs;         // (grid, K)
    Eigen::MatrixXd open_fraction;  // (grid, l): per class, fraction of its
                                    // residents in conducting states (averaged
                                    // kinds: mu-expected openness at u(z_i))
    Eigen::VectorXd njumps_cum;
    Eigen::VectorXd noise_energy;  // langevin: cumulative sum of |M eta|^2
    std::vector<JumpEvent> jumps;
    std::vector<int> final_states;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double sup_hnorm = 0.0;
    bool hnorm_flag = false;
};

enum class ProcessKind { Full, Averaged, Langevin };

// Shared engine for the two-timescale PDMP, its averaged limit, and the
// Langevin approximation: exponential-Euler Galerkin flow between events,
// thinning against the majorant Lambda* = N |E| alpha_max (1/eps + 1) for the
// full process and N |E| alpha_max for class switching.
class HybridSimulator {
  public:
    HybridSimulator(Scenario scenario, SimConfig config);

    const Scenario& scenario() const { return scenario_; }
    const SimConfig& config() const { return config_; }
    const SourceGeometry& geometry() const { return geom_; }
    const std::shared_ptr<const SpectralBasis>& basis() const { return geom_.basis; }
    const Eigen::VectorXd& stimulus_coeffs() const { return stim_; }
    double hnorm_bound() const { return hnorm_bound_; }

    HybridState initial_state(ProcessKind kind) const;

    // <G_r(u) + I/C, f_k> resp. <F_rbar(u) + I/C, f_k>
    Eigen::VectorXd reaction_full(const std::vector<int>& states,
                                  const Eigen::VectorXd& coeffs) const;
    Eigen::VectorXd reaction_averaged(const std::vector<int>& classes,
                                      const Eigen::VectorXd& coeffs) const;

    // one exponential-Euler update with the reaction frozen at step start
    void flow_step(HybridState& state, double h, ProcessKind kind) const;

    // one Langevin substep: flow update plus the sqrt(eps)-scaled exact-OU
    // noise increment, diffusion factor frozen at step start
    void em_step(HybridState& state, double h, RngStream& noise_rng) const;

    // advances state to its jump time (applying the jump) or to t_end;
    // candidate stream and acceptance draws come from rng
    std::optional<JumpEvent> next_jump(HybridState& state, double t_end, RngStream& rng,
                                       ProcessKind kind) const;

    double majorant(ProcessKind kind) const;

    // per-class open fraction of the current configuration (see Trajectory)
    Eigen::VectorXd open_fraction(const HybridState& state, ProcessKind kind) const;

    Trajectory run_pdmp(std::uint64_t seed, std::uint64_t stream = 0) const;
    Trajectory run_averaged(std::uint64_t seed, std::uint64_t stream = 0) const;
    Trajectory run_langevin(std::uint64_t seed, std::uint64_t stream = 0) const;

  private:
    struct Workspace;
    Trajectory run(ProcessKind kind, std::uint64_t seed, std::uint64_t stream) const;
    void substep(HybridState& state, double h, ProcessKind kind, Workspace& ws,
                 RngStream* noise, double* energy) const;
    void advance(HybridState& state, double t_target, ProcessKind kind, Workspace& ws,
                 RngStream* noise, double* energy, double* sup_h, bool* flag) const;
    double total_rate(const HybridState& state, ProcessKind kind, Workspace& ws) const;

    Scenario scenario_;
    SimConfig config_;
    SourceGeometry geom_;
    Eigen::VectorXd stim_;  // stimulus projection / C
    Eigen::ArrayXd lam_;    // nu * lambda_k
    Eigen::ArrayXd hw_;     // 1 + lambda_k, H-norm weights
    double hnorm_bound_;
};

}  // namespace pdmp
