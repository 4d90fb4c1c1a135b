#pragma once

#include "pdmp/fluctuation.hpp"
#include "pdmp/simulate.hpp"

namespace pdmp {

// Two-population (fast K, slow Ca) two-state channel scenario on a fiber of
// physical length `length`, mapped onto the unit interval by x' = x/length.
// The mapping rescales the diffusion coefficient by 1/length^2, point-source
// weights by 1/length, and stimulus support by 1/length; the indicator
// stimulus amplitude is unchanged. R and C are plain config values.
struct MLParameters {
    double C = 1.0;    // membrane capacitance
    double c_K = 32.0;
    double v_K = -70.0;
    double c_Ca = 0.0;
    double v_Ca = 0.0;
    double a = 1.0;    // axial conductance scale
    double R = 0.5;    // internal resistance
    int N_K = 50;
    int N_Ca = 0;
    double length = 0.5;
    double horizon = 2.4;
    double stim_strength = 300.0;
    double stim_x0 = 0.0;  // physical coordinates on [0, length]
    double stim_x1 = 0.1;

    // w-gate rates alpha = lw cosh(x/2)(1 + tanh x)/2, beta the (1 - tanh)
    // split, x = (y - v3)/v4; shallow defaults keep the thinning majorant small
    double lambda_K = 2.0;
    double v3_K = 10.0;
    double v4_K = 60.0;
    // slow gate when N_Ca > 0 (no literature default; c_Ca = 0 anyway)
    double lambda_Ca = 0.5;
    double v3_Ca = 0.0;
    double v4_Ca = 60.0;
    double rate_floor = 1e-4;

    double nu_eff() const { return a / (2.0 * R * C * length * length); }
};

// K states {closed, open} in one fast class; when N_Ca > 0, Ca states
// {closed, open} appended as two singleton (slow) classes
ChannelModel ml_channel_model(const MLParameters& p);

struct MLModel {
    MLParameters params;
    Scenario scenario;
    SimConfig config;
};

// scenario + run config on the unit interval: channels regular per population
// (K block first), weights 1/(N_pop length), initial field 0 and all channels
// closed, stimulus support [x0, x1]/length
MLModel ml_model(const MLParameters& p = {});

// unweighted per-channel correctors of the K population at measured voltages
// y_i: column s holds c_K/(alpha+beta) (v_K - y_i) (1_1(s) - mu_open).
// The full corrector is Phi = sum_i w_i table(i, r_i) delta_{z_i}.
Eigen::MatrixXd ml_phi_table(const MLParameters& p, const Eigen::VectorXd& voltages);

// table rows picked at the given K-channel states
Eigen::VectorXd ml_phi_closed_form(const MLParameters& p, const Eigen::VectorXd& voltages,
                                   const std::vector<int>& states);

// diffusion operator assembled from the closed-form per-channel variance
// s_i = c_K^2 (v_K - y_i)^2 alpha beta/(alpha+beta)^3 over the K block of
// `geom` (paper convention available via .paper())
DiffusionOperator ml_diffusion_closed_form(const MLParameters& p, const SourceGeometry& geom,
                                           const Eigen::VectorXd& coeffs);

// sup_y alpha beta/(alpha+beta)^3 = 1/(4 lambda_K), attained at y = v3
double ml_variance_sup(const MLParameters& p);

// c_K^2 (|v_K| + sup_t ||u_t||_H)^2 sup_y[ab/(a+b)^3] sum_k 2/(k pi)^2, the
// closing trace inequality (the series sums to 1/3); valid for nu >= 1/2
double ml_trace_bound(const MLParameters& p, double sup_hnorm);

}  // namespace pdmp
