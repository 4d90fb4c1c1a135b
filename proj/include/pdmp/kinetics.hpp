#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "pdmp/errors.hpp"

namespace pdmp {

// Voltage-dependent transition rate as a tagged closed form. The tag keeps the
// thinning/EM hot loops free of std::function dispatch for the shipped forms;
// Custom falls back to an arbitrary evaluator.
struct RateForm {
    enum class Kind { Zero, Constant, MLOpen, MLClose, Custom };

    Kind kind = Kind::Zero;
    double a = 0.0;      // Constant: value; ML forms: lambda_w
    double b = 0.0;      // ML forms: v3
    double c = 0.0;      // ML forms: v4
    double floor = 0.0;  // lower clamp keeping rates strictly positive
    std::function<double(double)> custom;

    static RateForm zero() { return {}; }
    static RateForm constant(double value);
    // lambda_w cosh((y-v3)/(2 v4)) (1 + tanh((y-v3)/v4))/2, clamped below
    static RateForm ml_open(double lambda_w, double v3, double v4, double floor = 1e-4);
    // same with (1 - tanh)
    static RateForm ml_close(double lambda_w, double v3, double v4, double floor = 1e-4);
    static RateForm function(std::function<double(double)> f);

    bool is_zero() const { return kind == Kind::Zero; }
    double operator()(double y) const;
};

// Finite-state channel: states E partitioned into classes E_1 | ... | E_l,
// per-state conductance/reversal, pairwise voltage-dependent rates with
// declared global bounds [alpha_min, alpha_max].
class ChannelModel {
  public:
    ChannelModel() = default;  // empty placeholder; scenarios assign a real model
    ChannelModel(std::vector<std::string> state_names, std::vector<int> state_class,
                 Eigen::VectorXd conductance, Eigen::VectorXd reversal,
                 std::vector<RateForm> rates,  // row-major |E| x |E|, diagonal ignored
                 double alpha_min, double alpha_max);

    int n_states() const { return static_cast<int>(names_.size()); }
    int n_classes() const { return static_cast<int>(class_states_.size()); }
    int class_of(int state) const { return state_class_[state]; }
    const std::vector<int>& states_in_class(int j) const { return class_states_[j]; }
    const std::string& state_name(int s) const { return names_[s]; }
    double conductance(int s) const { return cond_[s]; }
    double reversal(int s) const { return rev_[s]; }
    double alpha_min() const { return alpha_min_; }
    double alpha_max() const { return alpha_max_; }

    const RateForm& rate(int from, int to) const { return rates_[from * n_states() + to]; }
    double rate_value(int from, int to, double y) const { return rate(from, to)(y); }

    // structural (form-level) nonzero targets of a state, intra-class first
    const std::vector<int>& targets(int from) const { return targets_[from]; }

    // bound + Lipschitz grid checks over the operating voltage range
    void validate(double y_lo = -120.0, double y_hi = 60.0, double step = 0.5) const;

  private:
    std::vector<std::string> names_;
    std::vector<int> state_class_;
    std::vector<std::vector<int>> class_states_;
    Eigen::VectorXd cond_;
    Eigen::VectorXd rev_;
    std::vector<RateForm> rates_;
    std::vector<std::vector<int>> targets_;
    double alpha_min_ = 0.0;
    double alpha_max_ = 0.0;
};

// Generator over a class (or over all of E, or over the aggregated classes);
// `states` records which global indices the rows refer to.
struct GeneratorMatrix {
    Eigen::MatrixXd Q;
    double voltage = 0.0;
    std::vector<int> states;
};

struct QuasiStationary {
    Eigen::VectorXd p;
    double residual = 0.0;  // max |mu Q| after the solve
};

// B_j(y): restriction of the rate matrix to class j
GeneratorMatrix generator_matrix(const ChannelModel& model, double y, int j);

// rate matrix over all of E (no timescale split applied)
GeneratorMatrix full_generator(const ChannelModel& model, double y);

// l x l coarse generator with off-diagonals alpha_bar_jk(y)
GeneratorMatrix aggregated_generator(const ChannelModel& model, double y);

// unique mu with mu Q = 0, sum mu = 1; throws InvariantError when the null
// space of Q^T is not one-dimensional
QuasiStationary quasi_stationary(const GeneratorMatrix& gen);

// alpha_bar_jk(y) = sum_{zeta in E_j} mu_j(zeta) sum_{xi in E_k} alpha_{zeta,xi}(y)
double averaged_rate(const ChannelModel& model, double y, int j, int k);

}  // namespace pdmp
