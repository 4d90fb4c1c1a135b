#include "pdmp/morris_lecar.hpp"

#include <cmath>

namespace pdmp {

namespace {

void check_parameters(const MLParameters& p) {
    if (p.c_K < 0.0 || p.c_Ca < 0.0) throw ConfigError("conductances must be >= 0");
    if (p.N_K < 1) throw ConfigError("N_K must be >= 1");
    if (p.N_Ca < 0) throw ConfigError("N_Ca must be >= 0");
    if (!(p.C > 0.0) || !(p.R > 0.0) || !(p.a > 0.0))
        throw ConfigError("C, R, a must be positive");
    if (!(p.length > 0.0)) throw ConfigError("length must be positive");
    if (!(p.stim_x0 >= 0.0 && p.stim_x0 < p.stim_x1 && p.stim_x1 <= p.length))
        throw ConfigError("stimulus support must lie within [0, length]");
    if (!(p.lambda_K > 0.0) || !(p.v4_K > 0.0))
        throw ConfigError("lambda_K and v4_K must be positive");
    if (p.N_Ca > 0 && (!(p.lambda_Ca > 0.0) || !(p.v4_Ca > 0.0)))
        throw ConfigError("lambda_Ca and v4_Ca must be positive");
}

double grid_rate_max(const std::vector<RateForm>& forms, double y_lo, double y_hi,
                     double step) {
    double m = 0.0;
    for (double y = y_lo; y <= y_hi + 0.5 * step; y += step)
        for (const RateForm& f : forms)
            if (!f.is_zero()) m = std::max(m, f(y));
    return m;
}

}  // namespace

ChannelModel ml_channel_model(const MLParameters& p) {
    check_parameters(p);
    const RateForm aK = RateForm::ml_open(p.lambda_K, p.v3_K, p.v4_K, p.rate_floor);
    const RateForm bK = RateForm::ml_close(p.lambda_K, p.v3_K, p.v4_K, p.rate_floor);
    if (p.N_Ca == 0) {
        std::vector<RateForm> rates{RateForm::zero(), aK, bK, RateForm::zero()};
        const double amax = grid_rate_max(rates, -120.0, 60.0, 0.5);
        return ChannelModel({"K0", "K1"}, {0, 0}, Eigen::Vector2d(0.0, p.c_K),
                            Eigen::Vector2d(p.v_K, p.v_K), rates, p.rate_floor, amax);
    }
    const RateForm aC = RateForm::ml_open(p.lambda_Ca, p.v3_Ca, p.v4_Ca, p.rate_floor);
    const RateForm bC = RateForm::ml_close(p.lambda_Ca, p.v3_Ca, p.v4_Ca, p.rate_floor);
    const RateForm z = RateForm::zero();
    std::vector<RateForm> rates{z, aK, z, z,   //
                                bK, z, z, z,  //
                                z, z, z, aC,  //
                                z, z, bC, z};
    const double amax = grid_rate_max(rates, -120.0, 60.0, 0.5);
    Eigen::Vector4d cond(0.0, p.c_K, 0.0, p.c_Ca);
    Eigen::Vector4d rev(p.v_K, p.v_K, p.v_Ca, p.v_Ca);
    return ChannelModel({"K0", "K1", "Ca0", "Ca1"}, {0, 0, 1, 2}, cond, rev, rates,
                        p.rate_floor, amax);
}

MLModel ml_model(const MLParameters& p) {
    check_parameters(p);
    MLModel m;
    m.params = p;
    m.scenario.model = ml_channel_model(p);

    const int N = p.N_K + p.N_Ca;
    Eigen::VectorXd pos(N), w(N);
    for (int i = 0; i < p.N_K; ++i) {
        pos[i] = static_cast<double>(i + 1) / (p.N_K + 1);
        w[i] = 1.0 / (p.N_K * p.length);
    }
    for (int i = 0; i < p.N_Ca; ++i) {
        pos[p.N_K + i] = static_cast<double>(i + 1) / (p.N_Ca + 1);
        w[p.N_K + i] = 1.0 / (p.N_Ca * p.length);
    }
    m.scenario.layout = ChannelLayout{pos, w};
    m.scenario.stimulus =
        Stimulus{p.stim_strength, p.stim_x0 / p.length, p.stim_x1 / p.length};
    m.scenario.diffusion = p.nu_eff();
    m.scenario.capacitance = p.C;
    m.scenario.initial_states.assign(N, 0);
    for (int i = 0; i < p.N_Ca; ++i) m.scenario.initial_states[p.N_K + i] = 2;

    m.config.mode_count = 64;
    m.config.horizon = p.horizon;
    m.config.kappa = 0.015;  // the default 0.02 support would leave (0,1) at z_1 = 1/51
    return m;
}

Eigen::MatrixXd ml_phi_table(const MLParameters& p, const Eigen::VectorXd& voltages) {
    const RateForm aK = RateForm::ml_open(p.lambda_K, p.v3_K, p.v4_K, p.rate_floor);
    const RateForm bK = RateForm::ml_close(p.lambda_K, p.v3_K, p.v4_K, p.rate_floor);
    Eigen::MatrixXd tab(voltages.size(), 2);
    for (int i = 0; i < voltages.size(); ++i) {
        const double y = voltages[i];
        const double al = aK(y), be = bK(y);
        const double scale = p.c_K / (al + be) * (p.v_K - y);
        const double mu_open = al / (al + be);
        tab(i, 0) = scale * (0.0 - mu_open);
        tab(i, 1) = scale * (1.0 - mu_open);
    }
    return tab;
}

Eigen::VectorXd ml_phi_closed_form(const MLParameters& p, const Eigen::VectorXd& voltages,
                                   const std::vector<int>& states) {
    if (static_cast<int>(states.size()) != voltages.size())
        throw ConfigError("ml_phi_closed_form: states/voltages size mismatch");
    const Eigen::MatrixXd tab = ml_phi_table(p, voltages);
    Eigen::VectorXd phi(voltages.size());
    for (int i = 0; i < voltages.size(); ++i) {
        if (states[i] != 0 && states[i] != 1)
            throw ConfigError("ml_phi_closed_form: K states are 0/1");
        phi[i] = tab(i, states[i]);
    }
    return phi;
}

DiffusionOperator ml_diffusion_closed_form(const MLParameters& p, const SourceGeometry& geom,
                                           const Eigen::VectorXd& coeffs) {
    const RateForm aK = RateForm::ml_open(p.lambda_K, p.v3_K, p.v4_K, p.rate_floor);
    const RateForm bK = RateForm::ml_close(p.lambda_K, p.v3_K, p.v4_K, p.rate_floor);
    const int N = geom.n_channels();
    const int K = geom.n_modes();
    if (N < p.N_K) throw ConfigError("geometry smaller than the K population");
    const Eigen::VectorXd y = geom.W.transpose() * coeffs;

    DiffusionOperator op;
    op.s.setZero(N);
    op.factor.setZero(K, N);
    for (int i = 0; i < p.N_K; ++i) {
        const double al = aK(y[i]), be = bK(y[i]);
        const double diff = p.v_K - y[i];
        op.s[i] = p.c_K * p.c_K * diff * diff * al * be / std::pow(al + be, 3);
        op.factor.col(i) =
            std::sqrt(2.0 * op.s[i]) * geom.layout.weights[i] * geom.W.col(i);
    }
    op.a = op.factor * op.factor.transpose();
    return op;
}

double ml_variance_sup(const MLParameters& p) { return 1.0 / (4.0 * p.lambda_K); }

double ml_trace_bound(const MLParameters& p, double sup_hnorm) {
    const double amp = std::abs(p.v_K) + sup_hnorm;
    return p.c_K * p.c_K * amp * amp * ml_variance_sup(p) / 3.0;
}

}  // namespace pdmp
