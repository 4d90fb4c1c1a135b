#pragma once

#include <string>
#include <vector>

#include "pdmp/kinetics.hpp"
#include "pdmp/rng.hpp"

namespace testmodel {

// two-state gate C <-> O with constant rates
inline pdmp::ChannelModel two_state(double alpha, double beta, double cond = 1.0,
                                    double rev = 0.0) {
    using pdmp::RateForm;
    std::vector<RateForm> r(4, RateForm::zero());
    r[0 * 2 + 1] = RateForm::constant(alpha);
    r[1 * 2 + 0] = RateForm::constant(beta);
    Eigen::VectorXd g(2), v(2);
    g << 0.0, cond;
    v << rev, rev;
    return pdmp::ChannelModel({"C", "O"}, {0, 0}, g, v, r,
                              0.9 * std::min(alpha, beta), 1.1 * std::max(alpha, beta));
}

inline pdmp::ChannelModel ml_gate(double lam = 2.0, double v3 = 10.0, double v4 = 60.0,
                                  double cond = 32.0, double rev = -70.0) {
    using pdmp::RateForm;
    std::vector<RateForm> r(4, RateForm::zero());
    r[0 * 2 + 1] = RateForm::ml_open(lam, v3, v4);
    r[1 * 2 + 0] = RateForm::ml_close(lam, v3, v4);
    Eigen::VectorXd g(2), v(2);
    g << 0.0, cond;
    v << rev, rev;
    return pdmp::ChannelModel({"C", "O"}, {0, 0}, g, v, r, 1e-4, 3.3);
}

// dense constant-rate single-class model, rates uniform in (0.2, 2.0)
inline pdmp::ChannelModel random_dense(int n, pdmp::RngStream& rng) {
    using pdmp::RateForm;
    std::vector<RateForm> r(n * n, RateForm::zero());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b) r[a * n + b] = RateForm::constant(rng.uniform(0.2, 2.0));
    std::vector<std::string> names;
    for (int s = 0; s < n; ++s) names.push_back("s" + std::to_string(s));
    return pdmp::ChannelModel(names, std::vector<int>(n, 0), Eigen::VectorXd::Ones(n),
                              Eigen::VectorXd::Zero(n), r, 0.1, 2.5);
}

// a0 <-> a1 | b0 <-> b1 with one slow link each way
inline pdmp::ChannelModel two_class_model() {
    using pdmp::RateForm;
    const int n = 4;
    std::vector<RateForm> r(n * n, RateForm::zero());
    r[0 * n + 1] = RateForm::constant(2.0);
    r[1 * n + 0] = RateForm::constant(1.0);
    r[2 * n + 3] = RateForm::constant(1.0);
    r[3 * n + 2] = RateForm::constant(3.0);
    r[1 * n + 2] = RateForm::constant(0.5);  // a1 -> b0
    r[3 * n + 0] = RateForm::constant(0.8);  // b1 -> a0
    return pdmp::ChannelModel({"a0", "a1", "b0", "b1"}, {0, 0, 1, 1}, Eigen::VectorXd::Ones(n),
                              Eigen::VectorXd::Zero(n), r, 0.4, 3.1);
}

// gate class {C, O} plus a singleton class {X}
inline pdmp::ChannelModel gate_plus_singleton() {
    using pdmp::RateForm;
    const int n = 3;
    std::vector<RateForm> r(n * n, RateForm::zero());
    r[0 * n + 1] = RateForm::ml_open(2.0, 10.0, 60.0);
    r[1 * n + 0] = RateForm::ml_close(2.0, 10.0, 60.0);
    Eigen::VectorXd g(3), v(3);
    g << 0.0, 1.0, 0.5;
    v << -70.0, -70.0, 0.0;
    return pdmp::ChannelModel({"C", "O", "X"}, {0, 0, 1}, g, v, r, 1e-4, 3.3);
}

}  // namespace testmodel
