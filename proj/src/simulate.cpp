#include "pdmp/simulate.hpp"

#include <cmath>
#include <limits>

#include "pdmp/quadrature.hpp"

namespace pdmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// int_{x0}^{x1} f_k dx; closed form for the sine family
Eigen::VectorXd project_indicator(const SpectralBasis& basis, double x0, double x1) {
    const int K = basis.mode_count();
    Eigen::VectorXd v(K);
    if (basis.is_sine()) {
        for (int k = 1; k <= K; ++k)
            v[k - 1] = M_SQRT2 * (std::cos(k * M_PI * x0) - std::cos(k * M_PI * x1)) / (k * M_PI);
    } else {
        for (int k = 1; k <= K; ++k)
            v[k - 1] = integrate_adaptive(
                [&](double x) { return basis.evaluate(k, x, BasisKind::L2); }, x0, x1, 1e-12);
    }
    return v;
}

struct StepCache {
    double h = 0.0;
    Eigen::ArrayXd decay;
    Eigen::ArrayXd phi1;
    Eigen::ArrayXd ou;
};

StepCache make_cache(const Eigen::ArrayXd& lam, double h) {
    StepCache c;
    c.h = h;
    c.decay = (-lam * h).exp();
    c.phi1 = (1.0 - c.decay) / lam;
    c.ou = ((1.0 - c.decay.square()) / (2.0 * lam)).sqrt();
    return c;
}

}  // namespace

struct HybridSimulator::Workspace {
    Eigen::VectorXd g;           // K reaction coefficients
    Eigen::ArrayXd decay;        // K scratch for irregular substeps
    Eigen::ArrayXd phi1;
    Eigen::ArrayXd ou;
    Eigen::VectorXd chan_rate;   // N per-channel total jump rates
    Eigen::MatrixXd rate_table;  // N x (max targets) individual rates
    std::vector<int> rate_target;  // flattened target ids, per channel row
    Eigen::VectorXd eta;         // N standard normals
    Eigen::VectorXd noise;       // K injected noise
    StepCache cache_flow;
    StepCache cache_em;
    std::unique_ptr<DiffusionFactor> diff;
};

HybridSimulator::HybridSimulator(Scenario scenario, SimConfig config)
    : scenario_(std::move(scenario)), config_(std::move(config)) {
    if (scenario_.model.n_states() < 1) throw ConfigError("scenario has no channel model");
    if (config_.mode_count < 1) throw ConfigError("mode_count must be >= 1");
    if (!(config_.horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (!(config_.h_max > 0.0) || !(config_.langevin_h > 0.0))
        throw ConfigError("substeps must be positive");
    if (config_.output_points < 1) throw ConfigError("output_points must be >= 1");
    if (!(scenario_.diffusion > 0.0)) throw ConfigError("diffusion must be positive");
    if (!(scenario_.capacitance > 0.0)) throw ConfigError("capacitance must be positive");
    if (config_.epsilon < 0.0 || config_.epsilon > 1.0)
        throw ConfigError("epsilon must lie in [0,1]");

    auto basis = SpectralBasis::dirichlet_sine(config_.mode_count);
    ChannelLayout eff = scenario_.layout;
    eff.weights /= scenario_.capacitance;
    geom_ = config_.mollified ? SourceGeometry::make_mollified(basis, std::move(eff), config_.kappa)
                              : SourceGeometry::pointlike(basis, std::move(eff));

    stim_.setZero(config_.mode_count);
    if (scenario_.stimulus.strength != 0.0) {
        const Stimulus& st = scenario_.stimulus;
        if (!(st.x0 >= 0.0 && st.x1 <= 1.0 && st.x0 < st.x1))
            throw ConfigError("stimulus support must satisfy 0 <= x0 < x1 <= 1");
        stim_ = (st.strength / scenario_.capacitance) * project_indicator(*basis, st.x0, st.x1);
    }

    lam_ = scenario_.diffusion * basis->eigenvalues().array();
    hw_ = 1.0 + basis->eigenvalues().array();

    if (config_.hnorm_bound > 0.0) {
        hnorm_bound_ = config_.hnorm_bound;
    } else {
        double vmax = 0.0;
        for (int s = 0; s < scenario_.model.n_states(); ++s)
            vmax = std::max(vmax, std::abs(scenario_.model.reversal(s)));
        const double stim_mass = std::abs(scenario_.stimulus.strength) *
                                 (scenario_.stimulus.x1 - scenario_.stimulus.x0) /
                                 scenario_.capacitance;
        hnorm_bound_ = 10.0 * (vmax + stim_mass + 1.0);
    }

    const int N = geom_.n_channels();
    if (!scenario_.initial_states.empty() &&
        static_cast<int>(scenario_.initial_states.size()) != N)
        throw ConfigError("initial_states size mismatch");
    for (int s : scenario_.initial_states)
        if (s < 0 || s >= scenario_.model.n_states()) throw ConfigError("bad initial state");
    if (scenario_.initial_coeffs.size() != 0 &&
        scenario_.initial_coeffs.size() != config_.mode_count)
        throw ConfigError("initial_coeffs size mismatch");
}

HybridState HybridSimulator::initial_state(ProcessKind kind) const {
    HybridState st;
    st.t = 0.0;
    st.coeffs = scenario_.initial_coeffs.size() ? scenario_.initial_coeffs
                                                : Eigen::VectorXd::Zero(config_.mode_count);
    const int N = geom_.n_channels();
    st.r.resize(N, 0);
    if (!scenario_.initial_states.empty()) st.r = scenario_.initial_states;
    if (kind != ProcessKind::Full)
        for (int i = 0; i < N; ++i) st.r[i] = scenario_.model.class_of(st.r[i]);
    return st;
}

Eigen::VectorXd HybridSimulator::reaction_full(const std::vector<int>& states,
                                               const Eigen::VectorXd& coeffs) const {
    const int N = geom_.n_channels();
    if (static_cast<int>(states.size()) != N) throw ConfigError("reaction size mismatch");
    if (N == 0) return stim_;
    const Eigen::VectorXd y = geom_.W.transpose() * coeffs;
    Eigen::VectorXd q(N);
    for (int i = 0; i < N; ++i) {
        const int s = states[i];
        q[i] = geom_.layout.weights[i] * scenario_.model.conductance(s) *
               (scenario_.model.reversal(s) - y[i]);
    }
    return geom_.W * q + stim_;
}

Eigen::VectorXd HybridSimulator::reaction_averaged(const std::vector<int>& classes,
                                                   const Eigen::VectorXd& coeffs) const {
    const int N = geom_.n_channels();
    if (static_cast<int>(classes.size()) != N) throw ConfigError("reaction size mismatch");
    if (N == 0) return stim_;
    const Eigen::VectorXd y = geom_.W.transpose() * coeffs;
    Eigen::VectorXd q(N);
    for (int i = 0; i < N; ++i) {
        const int j = classes[i];
        const auto& members = scenario_.model.states_in_class(j);
        double acc = 0.0;
        if (members.size() == 1) {
            const int s = members[0];
            acc = scenario_.model.conductance(s) * (scenario_.model.reversal(s) - y[i]);
        } else {
            const QuasiStationary mu =
                quasi_stationary(generator_matrix(scenario_.model, y[i], j));
            for (std::size_t a = 0; a < members.size(); ++a)
                acc += mu.p[a] * scenario_.model.conductance(members[a]) *
                       (scenario_.model.reversal(members[a]) - y[i]);
        }
        q[i] = geom_.layout.weights[i] * acc;
    }
    return geom_.W * q + stim_;
}

void HybridSimulator::substep(HybridState& state, double h, ProcessKind kind, Workspace& ws,
                              RngStream* noise, double* energy) const {
    const bool noisy = kind == ProcessKind::Langevin && config_.epsilon > 0.0 &&
                       noise != nullptr && geom_.n_channels() > 0;
    const Eigen::MatrixXd* M = nullptr;
    if (noisy) {
        // diffusion factor frozen at the step start
        const Eigen::VectorXd y = geom_.W.transpose() * state.coeffs;
        M = &ws.diff->refresh(y, state.r);
    }
    ws.g = (kind == ProcessKind::Full) ? reaction_full(state.r, state.coeffs)
                                       : reaction_averaged(state.r, state.coeffs);
    const StepCache& cache = (kind == ProcessKind::Langevin) ? ws.cache_em : ws.cache_flow;
    const Eigen::ArrayXd* decay = &cache.decay;
    const Eigen::ArrayXd* phi1 = &cache.phi1;
    const Eigen::ArrayXd* ou = &cache.ou;
    if (h != cache.h) {
        ws.decay = (-lam_ * h).exp();
        ws.phi1 = (1.0 - ws.decay) / lam_;
        ws.ou = ((1.0 - ws.decay.square()) / (2.0 * lam_)).sqrt();
        decay = &ws.decay;
        phi1 = &ws.phi1;
        ou = &ws.ou;
    }
    state.coeffs.array() = (*decay) * state.coeffs.array() + (*phi1) * ws.g.array();
    if (noisy) {
        for (int i = 0; i < ws.eta.size(); ++i) ws.eta[i] = noise->normal();
        ws.noise = (*M) * ws.eta;
        if (energy != nullptr) *energy += ws.noise.squaredNorm();
        state.coeffs.array() += std::sqrt(config_.epsilon) * (*ou) * ws.noise.array();
    }
}

void HybridSimulator::advance(HybridState& state, double t_target, ProcessKind kind,
                              Workspace& ws, RngStream* noise, double* energy, double* sup_h,
                              bool* flag) const {
    if (config_.frozen_u) {
        state.t = t_target;
        return;
    }
    const double cap = (kind == ProcessKind::Langevin) ? config_.langevin_h : config_.h_max;
    while (state.t < t_target) {
        const double remaining = t_target - state.t;
        const double h = std::min(cap, remaining);
        if (h < 1e-15) {
            state.t = t_target;
            break;
        }
        substep(state, h, kind, ws, noise, energy);
        state.t = (remaining <= cap) ? t_target : state.t + h;
        const double hn = std::sqrt((hw_ * state.coeffs.array().square()).sum());
        if (hn > *sup_h) *sup_h = hn;
        if (hn > hnorm_bound_) {
            *flag = true;
            if (hn > 10.0 * hnorm_bound_)
                throw BlowUpError("H-norm " + std::to_string(hn) + " exceeded 10x bound at t=" +
                                  std::to_string(state.t));
        }
    }
}

Eigen::VectorXd HybridSimulator::open_fraction(const HybridState& state,
                                               ProcessKind kind) const {
    const ChannelModel& m = scenario_.model;
    const int N = geom_.n_channels();
    const int l = m.n_classes();
    Eigen::VectorXd num = Eigen::VectorXd::Zero(l);
    Eigen::VectorXd den = Eigen::VectorXd::Zero(l);
    Eigen::VectorXd y;
    if (kind != ProcessKind::Full && N > 0) y = geom_.W.transpose() * state.coeffs;
    for (int i = 0; i < N; ++i) {
        if (kind == ProcessKind::Full) {
            const int j = m.class_of(state.r[i]);
            den[j] += 1.0;
            if (m.conductance(state.r[i]) > 0.0) num[j] += 1.0;
        } else {
            const int j = state.r[i];
            den[j] += 1.0;
            const auto& members = m.states_in_class(j);
            if (members.size() == 1) {
                if (m.conductance(members[0]) > 0.0) num[j] += 1.0;
            } else {
                const QuasiStationary mu = quasi_stationary(generator_matrix(m, y[i], j));
                for (std::size_t a = 0; a < members.size(); ++a)
                    if (m.conductance(members[a]) > 0.0) num[j] += mu.p[a];
            }
        }
    }
    Eigen::VectorXd frac = Eigen::VectorXd::Zero(l);
    for (int j = 0; j < l; ++j) frac[j] = den[j] > 0.0 ? num[j] / den[j] : 0.0;
    return frac;
}

double HybridSimulator::majorant(ProcessKind kind) const {
    const ChannelModel& m = scenario_.model;
    const int N = geom_.n_channels();
    bool any = false, any_cross = false;
    for (int s = 0; s < m.n_states(); ++s)
        for (int t : m.targets(s)) {
            any = true;
            if (m.class_of(t) != m.class_of(s)) any_cross = true;
        }
    if (kind == ProcessKind::Full) {
        if (!any || N == 0) return 0.0;
        if (!(config_.epsilon > 0.0)) throw ConfigError("pdmp needs epsilon > 0");
        return N * m.n_states() * m.alpha_max() * (1.0 / config_.epsilon + 1.0);
    }
    if (!any_cross || N == 0) return 0.0;
    return N * m.n_states() * m.alpha_max();
}

double HybridSimulator::total_rate(const HybridState& state, ProcessKind kind,
                                   Workspace& ws) const {
    const ChannelModel& m = scenario_.model;
    const int N = geom_.n_channels();
    const Eigen::VectorXd y = geom_.W.transpose() * state.coeffs;
    double total = 0.0;
    if (kind == ProcessKind::Full) {
        for (int i = 0; i < N; ++i) {
            const int s = state.r[i];
            const auto& tg = m.targets(s);
            double acc = 0.0;
            for (std::size_t a = 0; a < tg.size(); ++a) {
                const double scale =
                    (m.class_of(tg[a]) == m.class_of(s)) ? 1.0 / config_.epsilon : 1.0;
                const double v = m.rate_value(s, tg[a], y[i]) * scale;
                ws.rate_table(i, a) = v;
                ws.rate_target[i * m.n_states() + static_cast<int>(a)] = tg[a];
                acc += v;
            }
            ws.chan_rate[i] = acc;
            total += acc;
        }
    } else {
        const int l = m.n_classes();
        for (int i = 0; i < N; ++i) {
            const int j = state.r[i];
            double acc = 0.0;
            int col = 0;
            for (int k = 0; k < l; ++k) {
                if (k == j) continue;
                const double v = averaged_rate(m, y[i], j, k);
                ws.rate_table(i, col) = v;
                ws.rate_target[i * m.n_states() + col] = k;
                ++col;
                acc += v;
            }
            ws.chan_rate[i] = acc;
            total += acc;
        }
    }
    return total;
}

std::optional<JumpEvent> HybridSimulator::next_jump(HybridState& state, double t_end,
                                                    RngStream& rng, ProcessKind kind) const {
    Workspace ws;
    const int N = geom_.n_channels();
    const int n = scenario_.model.n_states();
    ws.chan_rate.resize(N);
    ws.rate_table.resize(N, std::max(1, n));
    ws.rate_target.assign(static_cast<std::size_t>(N) * std::max(1, n), -1);
    ws.cache_flow = make_cache(lam_, config_.h_max);
    ws.cache_em = make_cache(lam_, config_.langevin_h);
    double sup_h = 0.0;
    bool flag = false;

    const double lambda_star = majorant(kind);
    if (!(lambda_star > 0.0)) {
        advance(state, t_end, kind, ws, nullptr, nullptr, &sup_h, &flag);
        return std::nullopt;
    }
    while (state.t < t_end) {
        const double t_cand = state.t + rng.exponential(lambda_star);
        if (t_cand >= t_end) {
            advance(state, t_end, kind, ws, nullptr, nullptr, &sup_h, &flag);
            return std::nullopt;
        }
        advance(state, t_cand, kind, ws, nullptr, nullptr, &sup_h, &flag);
        const double tot = total_rate(state, kind, ws);
        if (tot > lambda_star * (1.0 + 1e-9))
            throw InvariantError("thinning majorant violated: configured alpha_max too small");
        const double u = rng.uniform_co();
        if (u * lambda_star < tot) {
            double v = rng.uniform_co() * tot;
            int ch = 0;
            while (ch + 1 < N && v >= ws.chan_rate[ch]) v -= ws.chan_rate[ch++];
            const std::size_t tg_count =
                (kind == ProcessKind::Full)
                    ? scenario_.model.targets(state.r[ch]).size()
                    : static_cast<std::size_t>(scenario_.model.n_classes() - 1);
            double w = rng.uniform_co() * ws.chan_rate[ch];
            int col = 0;
            while (col + 1 < static_cast<int>(tg_count) && w >= ws.rate_table(ch, col))
                w -= ws.rate_table(ch, col++);
            const int target = ws.rate_target[ch * n + col];
            JumpEvent ev{state.t, ch, state.r[ch], target};
            state.r[ch] = target;
            return ev;
        }
    }
    return std::nullopt;
}

Trajectory HybridSimulator::run(ProcessKind kind, std::uint64_t seed,
                                std::uint64_t stream) const {
    RngStream jump_rng(seed, stream, 0);
    RngStream noise_rng(seed, stream, 1);

    const int N = geom_.n_channels();
    const int K = config_.mode_count;
    const int n = scenario_.model.n_states();
    const int l = scenario_.model.n_classes();
    const int P = config_.output_points;
    const double T = config_.horizon;

    Workspace ws;
    ws.g.resize(K);
    ws.chan_rate.resize(N);
    ws.rate_table.resize(N, std::max(1, n));
    ws.rate_target.assign(static_cast<std::size_t>(N) * std::max(1, n), -1);
    ws.eta.resize(N);
    ws.noise.resize(K);
    ws.cache_flow = make_cache(lam_, config_.h_max);
    ws.cache_em = make_cache(lam_, config_.langevin_h);
    if (kind == ProcessKind::Langevin && config_.epsilon > 0.0)
        ws.diff = std::make_unique<DiffusionFactor>(scenario_.model, geom_);

    HybridState state = initial_state(kind);

    Trajectory traj;
    traj.seed = seed;
    traj.stream = stream;
    traj.times.resize(P + 1);
    traj.coeffs.resize(P + 1, K);
    traj.open_fraction.resize(P + 1, l);
    traj.njumps_cum.resize(P + 1);
    traj.noise_energy.setZero(P + 1);

    long njumps = 0;
    double energy = 0.0;
    double sup_h = 0.0;
    bool flag = false;

    auto record = [&](int row) {
        traj.times[row] = T * row / P;
        traj.coeffs.row(row) = state.coeffs;
        traj.open_fraction.row(row) = open_fraction(state, kind);
        traj.njumps_cum[row] = static_cast<double>(njumps);
        traj.noise_energy[row] = energy;
    };
    record(0);

    const double lambda_star = majorant(kind);
    RngStream* noise = (kind == ProcessKind::Langevin) ? &noise_rng : nullptr;
    double t_cand =
        (lambda_star > 0.0) ? jump_rng.exponential(lambda_star) : kInf;

    for (int row = 1; row <= P; ++row) {
        const double t_tick = T * row / P;
        while (t_cand <= t_tick) {
            advance(state, t_cand, kind, ws, noise, &energy, &sup_h, &flag);
            const double tot = total_rate(state, kind, ws);
            if (tot > lambda_star * (1.0 + 1e-9))
                throw InvariantError("thinning majorant violated: configured alpha_max too small");
            const double u = jump_rng.uniform_co();
            if (u * lambda_star < tot) {
                double v = jump_rng.uniform_co() * tot;
                int ch = 0;
                while (ch + 1 < N && v >= ws.chan_rate[ch]) v -= ws.chan_rate[ch++];
                const std::size_t tg_count =
                    (kind == ProcessKind::Full)
                        ? scenario_.model.targets(state.r[ch]).size()
                        : static_cast<std::size_t>(l - 1);
                double w = jump_rng.uniform_co() * ws.chan_rate[ch];
                int col = 0;
                while (col + 1 < static_cast<int>(tg_count) && w >= ws.rate_table(ch, col))
                    w -= ws.rate_table(ch, col++);
                const int target = ws.rate_target[ch * n + col];
                if (config_.record_jumps)
                    traj.jumps.push_back({state.t, ch, state.r[ch], target});
                state.r[ch] = target;
                ++njumps;
            }
            t_cand = state.t + jump_rng.exponential(lambda_star);
        }
        advance(state, t_tick, kind, ws, noise, &energy, &sup_h, &flag);
        record(row);
    }

    traj.final_states = state.r;
    traj.sup_hnorm = sup_h;
    traj.hnorm_flag = flag;
    return traj;
}

void HybridSimulator::flow_step(HybridState& state, double h, ProcessKind kind) const {
    if (!(h > 0.0)) throw std::domain_error("flow_step: h must be positive");
    Workspace ws;
    ws.cache_flow = make_cache(lam_, config_.h_max);
    ws.cache_em = make_cache(lam_, config_.langevin_h);
    substep(state, h, kind, ws, nullptr, nullptr);
    state.t += h;
}

void HybridSimulator::em_step(HybridState& state, double h, RngStream& noise_rng) const {
    if (!(h > 0.0)) throw std::domain_error("em_step: h must be positive");
    Workspace ws;
    ws.eta.resize(geom_.n_channels());
    ws.cache_flow = make_cache(lam_, config_.h_max);
    ws.cache_em = make_cache(lam_, config_.langevin_h);
    if (config_.epsilon > 0.0 && geom_.n_channels() > 0)
        ws.diff = std::make_unique<DiffusionFactor>(scenario_.model, geom_);
    substep(state, h, ProcessKind::Langevin, ws, &noise_rng, nullptr);
    state.t += h;
}

Trajectory HybridSimulator::run_pdmp(std::uint64_t seed, std::uint64_t stream) const {
    if (!(config_.epsilon > 0.0)) throw ConfigError("pdmp needs epsilon > 0");
    return run(ProcessKind::Full, seed, stream);
}

Trajectory HybridSimulator::run_averaged(std::uint64_t seed, std::uint64_t stream) const {
    return run(ProcessKind::Averaged, seed, stream);
}

Trajectory HybridSimulator::run_langevin(std::uint64_t seed, std::uint64_t stream) const {
    return run(ProcessKind::Langevin, seed, stream);
}

}  // namespace pdmp
