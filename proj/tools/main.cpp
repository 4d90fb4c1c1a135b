#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pdmp/experiment.hpp"

namespace {

using pdmp::ExperimentConfig;

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> replicas;
    std::string epsilon;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "experiment config file");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "master seed (fallback: PDMP_SEED, config, 1)");
    sub->add_option("--replicas", c.replicas, "replica count override");
    sub->add_option("--epsilon", c.epsilon,
                    "epsilon override: one value, or a comma list (sweep; 'averaged' allowed)");
}

std::vector<double> parse_epsilon_list(const std::string& list) {
    std::vector<double> out;
    std::stringstream in(list);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        const size_t b = tok.find_first_not_of(" \t");
        const size_t e = tok.find_last_not_of(" \t");
        tok = b == std::string::npos ? "" : tok.substr(b, e - b + 1);
        if (tok == "averaged") {
            out.push_back(0.0);
            continue;
        }
        char* end = nullptr;
        const double x = std::strtod(tok.c_str(), &end);
        if (tok.empty() || end != tok.c_str() + tok.size() || !(x > 0.0 && x <= 1.0))
            throw pdmp::ConfigError("--epsilon: '" + tok + "' is not in (0,1] or 'averaged'");
        out.push_back(x);
    }
    if (out.empty()) throw pdmp::ConfigError("--epsilon: empty list");
    return out;
}

ExperimentConfig load(const Common& c, bool seed_flag_given) {
    ExperimentConfig cfg =
        c.config.empty() ? ExperimentConfig{} : pdmp::parse_config_file(c.config);
    if (!seed_flag_given) {
        if (const char* env = std::getenv("PDMP_SEED")) {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (*env == '\0' || *end != '\0')
                throw pdmp::ConfigError("PDMP_SEED is not an unsigned integer");
            cfg.seed = v;
        }
    } else {
        cfg.seed = *c.seed;
    }
    if (c.replicas) {
        if (*c.replicas < 1) throw pdmp::ConfigError("--replicas must be >= 1");
        cfg.sweep_replicas = *c.replicas;
        cfg.clt_replicas = *c.replicas;
    }
    return cfg;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream out(path);
    if (!out) throw pdmp::ConfigError("cannot write '" + path + "'");
    return out;
}

int run_simulate(const ExperimentConfig& cfg, const Common& c) {
    pdmp::ResolvedExperiment res = pdmp::resolve_experiment(cfg);
    if (!c.epsilon.empty()) {
        const auto eps = parse_epsilon_list(c.epsilon);
        if (eps.size() != 1 || eps[0] == 0.0)
            throw pdmp::ConfigError("simulate takes a single numeric --epsilon");
        res.sim.epsilon = eps[0];
    }
    pdmp::HybridSimulator sim(res.scenario, res.sim);
    pdmp::Trajectory traj;
    switch (cfg.mode) {
        case pdmp::ProcessKind::Full: traj = sim.run_pdmp(cfg.seed); break;
        case pdmp::ProcessKind::Averaged: traj = sim.run_averaged(cfg.seed); break;
        case pdmp::ProcessKind::Langevin: traj = sim.run_langevin(cfg.seed); break;
    }
    auto out = open_out(c.out, "trajectory.csv");
    pdmp::write_trajectory_csv(sim, traj, cfg.probes,
                               cfg.mode == pdmp::ProcessKind::Langevin, out);
    std::cout << "trajectory.csv: " << traj.times.size() << " rows, "
              << static_cast<long>(traj.njumps_cum[traj.njumps_cum.size() - 1])
              << " jumps, sup |u|_H = " << pdmp::csv_number(traj.sup_hnorm)
              << (traj.hnorm_flag ? " (a-priori bound exceeded)" : "") << "\n";
    return 0;
}

int run_sweep(ExperimentConfig cfg, const Common& c) {
    if (!c.epsilon.empty()) cfg.sweep_epsilons = parse_epsilon_list(c.epsilon);
    auto out = open_out(c.out, "sweep.csv");
    const auto rows = pdmp::run_epsilon_sweep(cfg, out);
    for (const auto& r : rows)
        std::cout << "epsilon " << pdmp::csv_number(r.epsilon) << ": mean sup error "
                  << pdmp::csv_number(r.mean_sup_err) << " +- "
                  << pdmp::csv_number(r.stderr_mean) << " (" << r.replicas << " replicas)\n";
    return 0;
}

int run_clt(ExperimentConfig cfg, const Common& c) {
    if (!c.epsilon.empty()) {
        const auto eps = parse_epsilon_list(c.epsilon);
        if (eps.size() != 1 || eps[0] == 0.0)
            throw pdmp::ConfigError("clt takes a single numeric --epsilon");
        cfg.clt_epsilon = eps[0];
    }
    auto out = open_out(c.out, "clt.csv");
    const auto rows = pdmp::run_clt_check(cfg, out);
    double worst = 0.0;
    for (const auto& r : rows)
        if (std::isfinite(r.ratio)) worst = std::max(worst, std::abs(r.ratio - 1.0));
    std::cout << "clt.csv: " << rows.size() << " channels, max |ratio - 1| = "
              << pdmp::csv_number(worst) << "\n";
    return 0;
}

int run_trace(const ExperimentConfig& cfg, const Common& c) {
    auto out = open_out(c.out, "trace.csv");
    const auto rows = pdmp::run_trace_series(cfg, out);
    auto svg = open_out(c.out, "trace.svg");
    pdmp::write_trace_svg(rows, svg);
    std::cout << "trace.csv + trace.svg: " << rows.size() << " points, final trace "
              << pdmp::csv_number(rows.empty() ? 0.0 : rows.back().trace) << "\n";
    return 0;
}

int run_phi(const ExperimentConfig& cfg) {
    const auto rep = pdmp::run_phi_check(cfg.seed, std::cout);
    return rep.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slow-fast stochastic neuron field: PDMP, averaged and Langevin simulators"};
    app.require_subcommand(1);

    Common c_sim, c_sweep, c_clt, c_trace, c_phi;
    CLI::App* sim = app.add_subcommand("simulate", "run one trajectory, write trajectory.csv");
    std::string mode;
    sim->add_option("--mode", mode, "pdmp|averaged|langevin (default from config)");
    add_common(sim, c_sim);
    CLI::App* sweep =
        app.add_subcommand("sweep", "paired epsilon sweep against the averaged limit");
    add_common(sweep, c_sweep);
    CLI::App* clt = app.add_subcommand("clt", "frozen-field variance check per channel");
    add_common(clt, c_clt);
    CLI::App* trace = app.add_subcommand("trace", "Tr Q_t series with closing bound");
    add_common(trace, c_trace);
    CLI::App* phi = app.add_subcommand("phi-check", "cross-validate the two Phi representations");
    add_common(phi, c_phi);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) {
            ExperimentConfig cfg = load(c_sim, c_sim.seed.has_value());
            if (!mode.empty()) {
                if (mode == "pdmp" || mode == "full")
                    cfg.mode = pdmp::ProcessKind::Full;
                else if (mode == "averaged")
                    cfg.mode = pdmp::ProcessKind::Averaged;
                else if (mode == "langevin")
                    cfg.mode = pdmp::ProcessKind::Langevin;
                else
                    throw pdmp::ConfigError("--mode must be pdmp|averaged|langevin");
            }
            return run_simulate(cfg, c_sim);
        }
        if (sweep->parsed()) return run_sweep(load(c_sweep, c_sweep.seed.has_value()), c_sweep);
        if (clt->parsed()) return run_clt(load(c_clt, c_clt.seed.has_value()), c_clt);
        if (trace->parsed()) return run_trace(load(c_trace, c_trace.seed.has_value()), c_trace);
        if (phi->parsed()) return run_phi(load(c_phi, c_phi.seed.has_value()));
    } catch (const pdmp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pdmp::InvariantError& e) {
        std::cerr << "numerical invariant breached: " << e.what() << "\n";
        return 3;
    } catch (const pdmp::BlowUpError& e) {
        std::cerr << "blow-up monitor: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
