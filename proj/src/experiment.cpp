#include "pdmp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "pdmp/fluctuation.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

// custom [model] section accumulated as raw text; the ChannelModel and the
// layout are assembled only once the whole file is read, so declaration
// order inside the section does not matter
struct RateEntry {
    std::string from, to, spec;
    int line;
};

struct ModelDraft {
    bool used = false;
    std::vector<std::string> states;
    std::vector<int> classes;
    std::vector<double> conductance, reversal;
    std::vector<RateEntry> rates;
    double alpha_min = 0.0;  // 0 = derive from the rate grid
    double alpha_max = 0.0;
    int channels = 0;
    std::vector<double> positions, weights;
    double stim_strength = 0.0, stim_x0 = 0.0, stim_x1 = 0.0;
    double diffusion = 1.0, capacitance = 1.0;
    std::vector<int> initial_states;
    std::vector<double> initial_coeffs;
};

struct Parser {
    std::string origin;
    int line = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
    }

    double num(const std::string& v) const {
        char* end = nullptr;
        double x = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size()) fail("expected a number, got '" + v + "'");
        return x;
    }

    int integer(const std::string& v) const {
        double x = num(v);
        if (x != std::floor(x) || std::abs(x) > 1e15) fail("expected an integer, got '" + v + "'");
        return static_cast<int>(x);
    }

    std::uint64_t u64(const std::string& v) const {
        char* end = nullptr;
        unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (v.empty() || end != v.c_str() + v.size()) fail("expected an unsigned integer");
        return x;
    }

    bool boolean(const std::string& v) const {
        if (v == "true" || v == "on" || v == "1") return true;
        if (v == "false" || v == "off" || v == "0") return false;
        fail("expected true/false, got '" + v + "'");
    }

    std::vector<double> numbers(const std::string& v) const {
        std::vector<double> out;
        for (const auto& tok : split(v, ',')) out.push_back(num(tok));
        return out;
    }

    std::vector<int> integers(const std::string& v) const {
        std::vector<int> out;
        for (const auto& tok : split(v, ',')) out.push_back(integer(tok));
        return out;
    }
};

RateForm parse_rate_form(const Parser& p, const std::string& spec) {
    std::istringstream in(spec);
    std::string kind;
    in >> kind;
    std::vector<double> args;
    std::string tok;
    while (in >> tok) args.push_back(p.num(tok));
    if (kind == "zero" && args.empty()) return RateForm::zero();
    if (kind == "constant" && args.size() == 1) return RateForm::constant(args[0]);
    if (kind == "ml_open" && (args.size() == 3 || args.size() == 4))
        return args.size() == 3 ? RateForm::ml_open(args[0], args[1], args[2])
                                : RateForm::ml_open(args[0], args[1], args[2], args[3]);
    if (kind == "ml_close" && (args.size() == 3 || args.size() == 4))
        return args.size() == 3 ? RateForm::ml_close(args[0], args[1], args[2])
                                : RateForm::ml_close(args[0], args[1], args[2], args[3]);
    p.fail("bad rate form '" + spec +
           "' (want: zero | constant c | ml_open lambda v3 v4 [floor] | ml_close ...)");
}

int state_index(const Parser& p, const ModelDraft& d, const std::string& name) {
    for (size_t s = 0; s < d.states.size(); ++s)
        if (d.states[s] == name) return static_cast<int>(s);
    char* end = nullptr;
    long idx = std::strtol(name.c_str(), &end, 10);
    if (!name.empty() && end == name.c_str() + name.size() && idx >= 0 &&
        idx < static_cast<long>(d.states.size()))
        return static_cast<int>(idx);
    p.fail("unknown state '" + name + "'");
}

Scenario build_custom(Parser& p, const ModelDraft& d) {
    const int n = static_cast<int>(d.states.size());
    if (n == 0) p.fail("[model] needs a 'states' list");
    std::vector<int> classes = d.classes.empty() ? std::vector<int>(n, 0) : d.classes;
    if (static_cast<int>(classes.size()) != n) p.fail("[model] classes/states size mismatch");
    if (static_cast<int>(d.conductance.size()) != n || static_cast<int>(d.reversal.size()) != n)
        p.fail("[model] conductance/reversal must list one value per state");

    std::vector<RateForm> forms(n * n);
    for (const RateEntry& e : d.rates) {
        p.line = e.line;
        const int i = state_index(p, d, e.from), j = state_index(p, d, e.to);
        if (i == j) p.fail("rate." + e.from + "." + e.to + ": diagonal entries are implied");
        forms[i * n + j] = parse_rate_form(p, e.spec);
    }

    double amin = d.alpha_min, amax = d.alpha_max;
    if (amin <= 0.0 || amax <= 0.0) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double y = -120.0; y <= 60.0 + 0.25; y += 0.5)
            for (const RateForm& f : forms)
                if (!f.is_zero()) {
                    lo = std::min(lo, f(y));
                    hi = std::max(hi, f(y));
                }
        if (!(hi > 0.0)) p.fail("[model] has no nonzero rates");
        if (amin <= 0.0) amin = lo;
        if (amax <= 0.0) amax = hi;
    }

    Eigen::VectorXd cond = Eigen::Map<const Eigen::VectorXd>(d.conductance.data(), n);
    Eigen::VectorXd rev = Eigen::Map<const Eigen::VectorXd>(d.reversal.data(), n);
    Scenario sc;
    sc.model = ChannelModel(d.states, classes, cond, rev, forms, amin, amax);
    sc.model.validate();

    if (!d.positions.empty()) {
        ChannelLayout lay;
        lay.positions = Eigen::Map<const Eigen::VectorXd>(d.positions.data(), d.positions.size());
        if (d.weights.empty())
            lay.weights = Eigen::VectorXd::Constant(d.positions.size(), 1.0 / d.positions.size());
        else if (d.weights.size() == d.positions.size())
            lay.weights = Eigen::Map<const Eigen::VectorXd>(d.weights.data(), d.weights.size());
        else
            p.fail("[model] weights/positions size mismatch");
        sc.layout = lay;
    } else if (d.channels > 0) {
        sc.layout = ChannelLayout::regular(d.channels);
    } else {
        p.fail("[model] needs 'channels' or an explicit 'positions' list");
    }

    sc.stimulus = Stimulus{d.stim_strength, d.stim_x0, d.stim_x1};
    sc.diffusion = d.diffusion;
    sc.capacitance = d.capacitance;
    sc.initial_states = d.initial_states;
    if (!d.initial_coeffs.empty())
        sc.initial_coeffs =
            Eigen::Map<const Eigen::VectorXd>(d.initial_coeffs.data(), d.initial_coeffs.size());
    return sc;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    ModelDraft draft;
    Parser p{origin, 0};
    bool name_set = false;
    int model_line = 0;

    std::istringstream in(text);
    std::string raw, section;
    while (std::getline(in, raw)) {
        ++p.line;
        const size_t hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') p.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "scenario" && section != "morris_lecar" && section != "model" &&
                section != "sweep" && section != "clt" && section != "trace")
                p.fail("unknown section [" + section + "]");
            if (section == "model") {
                draft.used = true;
                model_line = p.line;
            }
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos) p.fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty()) p.fail("key outside any [section]");

        if (section == "scenario") {
            if (key == "name") {
                if (val != "morris_lecar" && val != "custom")
                    p.fail("scenario name must be morris_lecar or custom");
                cfg.scenario_name = val;
                name_set = true;
            } else if (key == "mode") {
                if (val == "pdmp" || val == "full")
                    cfg.mode = ProcessKind::Full;
                else if (val == "averaged")
                    cfg.mode = ProcessKind::Averaged;
                else if (val == "langevin")
                    cfg.mode = ProcessKind::Langevin;
                else
                    p.fail("mode must be pdmp|averaged|langevin");
            } else if (key == "modes")
                cfg.sim.mode_count = p.integer(val);
            else if (key == "horizon")
                cfg.sim.horizon = p.num(val);
            else if (key == "h_max")
                cfg.sim.h_max = p.num(val);
            else if (key == "langevin_h")
                cfg.sim.langevin_h = p.num(val);
            else if (key == "epsilon")
                cfg.sim.epsilon = p.num(val);
            else if (key == "mollified")
                cfg.sim.mollified = p.boolean(val);
            else if (key == "kappa")
                cfg.sim.kappa = p.num(val);
            else if (key == "output_points")
                cfg.sim.output_points = p.integer(val);
            else if (key == "hnorm_bound")
                cfg.sim.hnorm_bound = p.num(val);
            else if (key == "frozen_u")
                cfg.sim.frozen_u = p.boolean(val);
            else if (key == "probes")
                cfg.probes = p.numbers(val);
            else if (key == "seed")
                cfg.seed = p.u64(val);
            else if (key == "threads")
                cfg.threads = p.integer(val);
            else
                p.fail("unknown key '" + key + "' in [scenario]");
        } else if (section == "morris_lecar") {
            MLParameters& m = cfg.ml;
            if (key == "C")
                m.C = p.num(val);
            else if (key == "c_K")
                m.c_K = p.num(val);
            else if (key == "v_K")
                m.v_K = p.num(val);
            else if (key == "c_Ca")
                m.c_Ca = p.num(val);
            else if (key == "v_Ca")
                m.v_Ca = p.num(val);
            else if (key == "a")
                m.a = p.num(val);
            else if (key == "R")
                m.R = p.num(val);
            else if (key == "N_K")
                m.N_K = p.integer(val);
            else if (key == "N_Ca")
                m.N_Ca = p.integer(val);
            else if (key == "length")
                m.length = p.num(val);
            else if (key == "horizon")
                m.horizon = p.num(val);
            else if (key == "stim_strength")
                m.stim_strength = p.num(val);
            else if (key == "stim_x0")
                m.stim_x0 = p.num(val);
            else if (key == "stim_x1")
                m.stim_x1 = p.num(val);
            else if (key == "lambda_K")
                m.lambda_K = p.num(val);
            else if (key == "v3_K")
                m.v3_K = p.num(val);
            else if (key == "v4_K")
                m.v4_K = p.num(val);
            else if (key == "lambda_Ca")
                m.lambda_Ca = p.num(val);
            else if (key == "v3_Ca")
                m.v3_Ca = p.num(val);
            else if (key == "v4_Ca")
                m.v4_Ca = p.num(val);
            else if (key == "rate_floor")
                m.rate_floor = p.num(val);
            else
                p.fail("unknown key '" + key + "' in [morris_lecar]");
        } else if (section == "model") {
            if (key == "states")
                draft.states = split(val, ',');
            else if (key == "classes")
                draft.classes = p.integers(val);
            else if (key == "conductance")
                draft.conductance = p.numbers(val);
            else if (key == "reversal")
                draft.reversal = p.numbers(val);
            else if (key.rfind("rate.", 0) == 0) {
                const size_t dot = key.find('.', 5);
                if (dot == std::string::npos) p.fail("rate keys look like rate.FROM.TO");
                draft.rates.push_back(
                    RateEntry{key.substr(5, dot - 5), key.substr(dot + 1), val, p.line});
            } else if (key == "alpha_min")
                draft.alpha_min = p.num(val);
            else if (key == "alpha_max")
                draft.alpha_max = p.num(val);
            else if (key == "channels")
                draft.channels = p.integer(val);
            else if (key == "positions")
                draft.positions = p.numbers(val);
            else if (key == "weights")
                draft.weights = p.numbers(val);
            else if (key == "stimulus") {
                auto v = p.numbers(val);
                if (v.size() != 3) p.fail("stimulus = strength, x0, x1");
                draft.stim_strength = v[0], draft.stim_x0 = v[1], draft.stim_x1 = v[2];
            } else if (key == "diffusion")
                draft.diffusion = p.num(val);
            else if (key == "capacitance")
                draft.capacitance = p.num(val);
            else if (key == "initial_states")
                draft.initial_states = p.integers(val);
            else if (key == "initial_coeffs")
                draft.initial_coeffs = p.numbers(val);
            else
                p.fail("unknown key '" + key + "' in [model]");
        } else if (section == "sweep") {
            if (key == "epsilons") {
                cfg.sweep_epsilons.clear();
                for (const auto& tok : split(val, ',')) {
                    if (tok == "averaged") {
                        cfg.sweep_epsilons.push_back(0.0);
                        continue;
                    }
                    const double e = p.num(tok);
                    if (!(e > 0.0 && e <= 1.0))
                        p.fail("sweep epsilon must lie in (0,1] or be 'averaged'");
                    cfg.sweep_epsilons.push_back(e);
                }
                if (cfg.sweep_epsilons.empty()) p.fail("empty epsilon list");
            } else if (key == "replicas") {
                cfg.sweep_replicas = p.integer(val);
                if (cfg.sweep_replicas < 1) p.fail("replicas must be >= 1");
            } else
                p.fail("unknown key '" + key + "' in [sweep]");
        } else if (section == "clt") {
            if (key == "epsilon") {
                cfg.clt_epsilon = p.num(val);
                if (!(cfg.clt_epsilon > 0.0 && cfg.clt_epsilon <= 1.0))
                    p.fail("clt epsilon must lie in (0,1]");
            } else if (key == "replicas") {
                cfg.clt_replicas = p.integer(val);
                if (cfg.clt_replicas < 2) p.fail("clt needs >= 2 replicas");
            } else if (key == "t") {
                cfg.clt_t = p.num(val);
                if (!(cfg.clt_t > 0.0)) p.fail("clt t must be positive");
            } else
                p.fail("unknown key '" + key + "' in [clt]");
        } else {  // [trace]
            if (key == "horizon")
                cfg.trace_horizon = p.num(val);
            else if (key == "output_points")
                cfg.trace_output_points = p.integer(val);
            else
                p.fail("unknown key '" + key + "' in [trace]");
        }
    }

    for (double x : cfg.probes) {
        p.line = 0;
        if (!(x >= 0.0 && x <= 1.0))
            throw ConfigError(origin + ": probes must lie in [0,1]");
    }

    if (draft.used) {
        if (name_set && cfg.scenario_name != "custom")
            throw ConfigError(origin + ":" + std::to_string(model_line) +
                              ": [model] section conflicts with scenario name '" +
                              cfg.scenario_name + "'");
        cfg.scenario_name = "custom";
        p.line = model_line;
        cfg.custom = build_custom(p, draft);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& cfg) {
    ResolvedExperiment out;
    if (cfg.scenario_name == "custom") {
        if (!cfg.custom) throw ConfigError("scenario 'custom' requires a [model] section");
        out.scenario = *cfg.custom;
        out.sim = SimConfig{};
    } else {
        MLModel m = ml_model(cfg.ml);
        out.scenario = m.scenario;
        out.sim = m.config;
    }
    const SimOverrides& o = cfg.sim;
    if (o.mode_count) out.sim.mode_count = *o.mode_count;
    if (o.horizon) out.sim.horizon = *o.horizon;
    if (o.h_max) out.sim.h_max = *o.h_max;
    if (o.langevin_h) out.sim.langevin_h = *o.langevin_h;
    if (o.epsilon) out.sim.epsilon = *o.epsilon;
    if (o.mollified) out.sim.mollified = *o.mollified;
    if (o.kappa) out.sim.kappa = *o.kappa;
    if (o.output_points) out.sim.output_points = *o.output_points;
    if (o.hnorm_bound) out.sim.hnorm_bound = *o.hnorm_bound;
    if (o.frozen_u) out.sim.frozen_u = *o.frozen_u;
    return out;
}

std::string csv_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_trajectory_csv(const HybridSimulator& sim, const Trajectory& traj,
                          const std::vector<double>& probes, bool with_noise_energy,
                          std::ostream& out) {
    const auto& basis = *sim.basis();
    std::vector<Eigen::VectorXd> eval;
    eval.reserve(probes.size());
    for (double x : probes) eval.push_back(basis.evaluate_all(x));

    out << "t";
    for (double x : probes) {
        char label[32];
        std::snprintf(label, sizeof label, "%g", x);
        out << ", u@" << label;
    }
    for (int c = 0; c < traj.open_fraction.cols(); ++c) out << ", open_fraction_" << c;
    out << ", njumps_cum";
    if (with_noise_energy) out << ", noise_energy";
    out << "\n";

    for (int j = 0; j < traj.times.size(); ++j) {
        out << csv_number(traj.times[j]);
        for (const auto& e : eval) out << ", " << csv_number(traj.coeffs.row(j).dot(e));
        for (int c = 0; c < traj.open_fraction.cols(); ++c)
            out << ", " << csv_number(traj.open_fraction(j, c));
        out << ", " << csv_number(traj.njumps_cum[j]);
        if (with_noise_energy) out << ", " << csv_number(traj.noise_energy[j]);
        out << "\n";
    }
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (n <= 0) return;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex guard;
    std::exception_ptr first;
    auto work = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(guard);
                if (!first) first = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (first) std::rethrow_exception(first);
}

std::vector<SweepRow> run_epsilon_sweep(const ExperimentConfig& cfg, std::ostream& csv) {
    const ResolvedExperiment res = resolve_experiment(cfg);
    const int R = cfg.sweep_replicas;
    const int E = static_cast<int>(cfg.sweep_epsilons.size());
    if (E == 0) throw ConfigError("epsilon sweep: empty epsilon list");

    Eigen::MatrixXd err(R, E);
    parallel_for(R, cfg.threads, [&](int r) {
        HybridSimulator av(res.scenario, res.sim);
        const Trajectory ref = av.run_averaged(cfg.seed, r);
        for (int e = 0; e < E; ++e) {
            const double eps = cfg.sweep_epsilons[e];
            if (eps == 0.0) {
                err(r, e) = 0.0;
                continue;
            }
            SimConfig c = res.sim;
            c.epsilon = eps;
            HybridSimulator sim(res.scenario, c);
            const Trajectory tr = sim.run_pdmp(cfg.seed, r);
            double sup = 0.0;
            for (int j = 0; j < tr.times.size(); ++j)
                sup = std::max(sup, (tr.coeffs.row(j) - ref.coeffs.row(j)).norm());
            err(r, e) = sup;
        }
    });

    std::vector<SweepRow> rows;
    csv << "epsilon, mean_sup_err, stderr, replicas\n";
    for (int e = 0; e < E; ++e) {
        SweepRow row;
        row.epsilon = cfg.sweep_epsilons[e];
        row.replicas = R;
        row.mean_sup_err = err.col(e).mean();
        const double ss = (err.col(e).array() - row.mean_sup_err).square().sum();
        row.stderr_mean = R > 1 ? std::sqrt(ss / (R - 1) / R) : 0.0;
        csv << csv_number(row.epsilon) << ", " << csv_number(row.mean_sup_err) << ", "
            << csv_number(row.stderr_mean) << ", " << row.replicas << "\n";
        rows.push_back(row);
    }
    return rows;
}

std::vector<CltRow> run_clt_check(const ExperimentConfig& cfg, std::ostream& csv) {
    const ResolvedExperiment res = resolve_experiment(cfg);
    const ChannelModel& model = res.scenario.model;
    if (model.n_classes() != 1)
        throw ConfigError("clt check requires a single-class model (per-class corrector)");

    SimConfig c = res.sim;
    c.frozen_u = true;
    c.horizon = cfg.clt_t;
    c.epsilon = cfg.clt_epsilon;
    c.record_jumps = true;

    HybridSimulator probe(res.scenario, c);
    const HybridState init = probe.initial_state(ProcessKind::Full);
    const Eigen::VectorXd y = probe.geometry().W.transpose() * init.coeffs;
    const int N = res.scenario.layout.size();
    const int n = model.n_states();

    Eigen::MatrixXd dtab(N, n);
    Eigen::VectorXd predicted(N);
    for (int i = 0; i < N; ++i) {
        const ChannelPoisson cp = solve_channel(model, 0, y[i]);
        dtab.row(i) = cp.d.transpose();
        predicted[i] = 2.0 * cp.s * cfg.clt_t;
    }

    const int R = cfg.clt_replicas;
    Eigen::MatrixXd X(R, N);
    parallel_for(R, cfg.threads, [&](int r) {
        HybridSimulator sim(res.scenario, c);
        const Trajectory tr = sim.run_pdmp(cfg.seed, r);
        std::vector<int> cur = init.r;
        std::vector<double> last(N, 0.0);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(N);
        for (const JumpEvent& ev : tr.jumps) {
            acc[ev.channel] += dtab(ev.channel, cur[ev.channel]) * (ev.t - last[ev.channel]);
            cur[ev.channel] = ev.to;
            last[ev.channel] = ev.t;
        }
        for (int i = 0; i < N; ++i) acc[i] += dtab(i, cur[i]) * (cfg.clt_t - last[i]);
        X.row(r) = acc.transpose() / std::sqrt(cfg.clt_epsilon);
    });

    std::vector<CltRow> rows;
    csv << "channel, t, empirical_var, predicted_var, ratio, ci_low, ci_high\n";
    for (int i = 0; i < N; ++i) {
        const double mean = X.col(i).mean();
        const Eigen::ArrayXd dev = X.col(i).array() - mean;
        const double var = dev.square().sum() / (R - 1);
        const double m4 = dev.pow(4).sum() / R;
        const double se = std::sqrt(std::max(0.0, m4 - var * var) / R);
        CltRow row;
        row.channel = i;
        row.t = cfg.clt_t;
        row.empirical_var = var;
        row.predicted_var = predicted[i];
        row.ratio = predicted[i] > 0.0 ? var / predicted[i]
                                       : std::numeric_limits<double>::quiet_NaN();
        row.ci_low = var - 1.96 * se;
        row.ci_high = var + 1.96 * se;
        csv << row.channel << ", " << csv_number(row.t) << ", " << csv_number(row.empirical_var)
            << ", " << csv_number(row.predicted_var) << ", " << csv_number(row.ratio) << ", "
            << csv_number(row.ci_low) << ", " << csv_number(row.ci_high) << "\n";
        rows.push_back(row);
    }
    return rows;
}

std::vector<TraceRow> run_trace_series(const ExperimentConfig& cfg, std::ostream& csv) {
    const ResolvedExperiment res = resolve_experiment(cfg);
    SimConfig c = res.sim;
    if (cfg.trace_horizon) c.horizon = *cfg.trace_horizon;
    if (cfg.trace_output_points) c.output_points = *cfg.trace_output_points;

    HybridSimulator sim(res.scenario, c);
    const Trajectory tr = sim.run_averaged(cfg.seed);
    const ChannelModel& model = res.scenario.model;
    const int P = static_cast<int>(tr.times.size());
    const bool is_ml = cfg.scenario_name != "custom";

    // class occupancy along the grid, replayed from the jump log
    std::vector<int> cls = sim.initial_state(ProcessKind::Averaged).r;
    size_t jidx = 0;

    std::vector<Eigen::VectorXd> diag;
    diag.reserve(P);
    std::vector<TraceRow> rows;
    csv << "t, trace, tail_bound, paper_bound\n";
    double sup_h = 0.0;
    const Eigen::VectorXd lam = sim.basis()->eigenvalues();
    for (int j = 0; j < P; ++j) {
        while (jidx < tr.jumps.size() && tr.jumps[jidx].t <= tr.times[j] + 1e-15) {
            cls[tr.jumps[jidx].channel] = tr.jumps[jidx].to;
            ++jidx;
        }
        diag.push_back(trace_diag(tr.coeffs.row(j).transpose(), cls, model, sim.geometry()));
        const double h2 =
            (tr.coeffs.row(j).transpose().array().square() * (1.0 + lam.array())).sum();
        sup_h = std::max(sup_h, std::sqrt(h2));

        TraceRow row;
        row.t = tr.times[j];
        if (j == 0) {
            row.trace = 0.0;
            row.tail_bound = 0.0;
        } else {
            const TraceResult q =
                trace_Q(tr.times.head(j + 1), diag, tr.times[j], res.scenario.diffusion,
                        *sim.basis());
            row.trace = q.value;
            row.tail_bound = q.tail_bound;
        }
        row.paper_bound =
            is_ml ? ml_trace_bound(cfg.ml, sup_h) : std::numeric_limits<double>::quiet_NaN();
        csv << csv_number(row.t) << ", " << csv_number(row.trace) << ", "
            << csv_number(row.tail_bound) << ", " << csv_number(row.paper_bound) << "\n";
        rows.push_back(row);
    }
    return rows;
}

void write_trace_svg(const std::vector<TraceRow>& rows, std::ostream& svg) {
    const double W = 720, H = 440, L = 80, Rm = 24, T = 24, B = 56;
    double tmax = 1e-300, ymax = 1e-300;
    for (const TraceRow& r : rows) {
        tmax = std::max(tmax, r.t);
        ymax = std::max(ymax, r.trace + r.tail_bound);
        if (std::isfinite(r.paper_bound)) ymax = std::max(ymax, r.paper_bound);
    }
    ymax *= 1.05;
    auto px = [&](double t) { return L + (W - L - Rm) * (tmax > 0 ? t / tmax : 0.0); };
    auto py = [&](double v) { return H - B - (H - T - B) * (v / ymax); };
    auto poly = [&](auto value) {
        std::string pts;
        for (const TraceRow& r : rows) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(r.t), py(value(r)));
            pts += buf;
        }
        return pts;
    };

    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\""
        << H - B << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double tv = tmax * k / 4, yv = ymax * k / 4;
        char tb[32], yb[32];
        std::snprintf(tb, sizeof tb, "%.3g", tv);
        std::snprintf(yb, sizeof yb, "%.3g", yv);
        svg << "<text x=\"" << px(tv) << "\" y=\"" << H - B + 18
            << "\" font-size=\"12\" text-anchor=\"middle\">" << tb << "</text>\n"
            << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << yb << "</text>\n";
    }
    const bool has_bound = !rows.empty() && std::isfinite(rows.front().paper_bound);
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\""
        << poly([](const TraceRow& r) { return r.trace; }) << "\"/>\n";
    if (has_bound)
        svg << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.2\" "
               "stroke-dasharray=\"6 4\" points=\""
            << poly([&](const TraceRow& r) { return std::min(r.paper_bound, ymax); })
            << "\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 14
        << "\" font-size=\"13\" text-anchor=\"middle\">t</text>\n"
        << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 << "\" font-size=\"13\">Tr Q_t"
        << (has_bound ? " (solid), closing bound (dashed)" : "") << "</text>\n"
        << "</svg>\n";
}

PhiCheckReport run_phi_check(std::uint64_t seed, std::ostream& report) {
    PhiCheckReport rep;
    const int random_instances = 100, degenerate = 5;
    rep.instances = random_instances + degenerate;

    for (int inst = 0; inst < rep.instances; ++inst) {
        RngStream rng(seed, static_cast<std::uint64_t>(inst), 0);
        const int n = 2 + inst % 5;
        GeneratorMatrix gen;
        gen.Q.setZero(n, n);
        gen.states.resize(n);
        for (int i = 0; i < n; ++i) gen.states[i] = i;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                if (j != i) gen.Q(i, j) = rng.uniform(0.2, 2.0);
            gen.Q(i, i) = -gen.Q.row(i).sum();
        }
        const QuasiStationary mu = quasi_stationary(gen);

        Eigen::VectorXd g(n);
        if (inst >= random_instances)
            g.setConstant(0.7);  // constant observable: d = 0, phi = 0
        else
            for (int i = 0; i < n; ++i) g[i] = rng.uniform(-1.0, 1.0);
        const Eigen::VectorXd d = g - Eigen::VectorXd::Constant(n, mu.p.dot(g));

        const Eigen::VectorXd phi_lin = solve_phi_linear(gen, d, mu);
        const Eigen::VectorXd phi_int = solve_phi_integral(gen, d);
        const double scale = std::max(1.0, phi_lin.cwiseAbs().maxCoeff());
        const double gap = (phi_lin - phi_int).cwiseAbs().maxCoeff() / scale;
        const double fred = (gen.Q * phi_lin + d).cwiseAbs().maxCoeff();
        const double cent = std::abs(mu.p.dot(phi_lin));
        if (gap > rep.max_rel_gap) {
            rep.max_rel_gap = gap;
            rep.worst_instance = inst;
        }
        rep.max_fredholm = std::max(rep.max_fredholm, fred);
        rep.max_centering = std::max(rep.max_centering, cent);
    }

    // closed forms of the potassium gate against the generic solver
    MLParameters p;
    const ChannelModel model = ml_channel_model(p);
    RngStream rng(seed, 1u << 20, 0);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd y(1);
        y[0] = rng.uniform(-90.0, 50.0);
        const Eigen::MatrixXd tab = ml_phi_table(p, y);
        const ChannelPoisson cp = solve_channel(model, 0, y[0]);
        const double scale = std::max(1.0, cp.phi.cwiseAbs().maxCoeff());
        const double gap = std::max(std::abs(tab(0, 0) - cp.phi[0]),
                                    std::abs(tab(0, 1) - cp.phi[1])) /
                           scale;
        rep.max_closed_form_gap = std::max(rep.max_closed_form_gap, gap);
    }

    rep.pass = rep.max_rel_gap <= 1e-9 && rep.max_fredholm <= 1e-12 &&
               rep.max_centering <= 1e-12 && rep.max_closed_form_gap <= 1e-12;

    report << "phi check: " << rep.instances << " random generators, |E| in {2..6}, seed "
           << seed << "\n"
           << "  max relative gap, linear vs integral: " << csv_number(rep.max_rel_gap)
           << " (tolerance 1e-9)\n"
           << "  max Fredholm residual |B phi + d|:    " << csv_number(rep.max_fredholm)
           << " (tolerance 1e-12)\n"
           << "  max centering residual |mu phi|:      " << csv_number(rep.max_centering)
           << " (tolerance 1e-12)\n"
           << "  max closed-form gap (potassium gate): "
           << csv_number(rep.max_closed_form_gap) << " (tolerance 1e-12)\n";
    if (!rep.pass && rep.worst_instance >= 0)
        report << "  worst instance: " << rep.worst_instance << " (stream " << rep.worst_instance
               << " of seed " << seed << ")\n";
    report << "result: " << (rep.pass ? "PASS" : "FAIL") << "\n";
    return rep;
}

}  // namespace pdmp
