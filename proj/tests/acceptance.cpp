// Acceptance harness: ten numbered criteria, one PASS/FAIL line each with the
// measured numbers. Criterion 10 is a qualitative scenario check and is
// reported without affecting the exit code; everything else is blocking.
//
//   acceptance [--criterion N ...] [--cli PATH] [--seed U64]

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pdmp/experiment.hpp"
#include "pdmp/fluctuation.hpp"
#include "pdmp/kinetics.hpp"
#include "pdmp/morris_lecar.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/simulate.hpp"
#include "pdmp/spectral.hpp"

namespace {

using namespace pdmp;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double x, const char* f = "%.3g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, x);
    return buf;
}

// two-state scenario shared by the statistical criteria; conductances and
// rates are O(1) so absolute tolerances keep their meaning
const char* kSmallConfig = R"(
[scenario]
name = custom
mode = pdmp
modes = 8
horizon = 0.5
h_max = 1e-3
epsilon = 0.01
output_points = 20
seed = 7

[model]
states = C, O
classes = 0, 0
conductance = 0, 1
reversal = 0, 1
rate.C.O = constant 1.3
rate.O.C = constant 0.4
channels = 4
stimulus = 25, 0.2, 0.6
diffusion = 1
capacitance = 1

[sweep]
epsilons = 1, 0.1, averaged
replicas = 3

[clt]
epsilon = 0.01
replicas = 500
t = 1
)";

const char* kGreenKuboConfig = R"(
[scenario]
name = custom
modes = 8
horizon = 1

[model]
states = C, O
classes = 0, 0
conductance = 0, 1
reversal = 0, 1
rate.C.O = constant 1.3
rate.O.C = constant 0.4
channels = 2
diffusion = 1
capacitance = 1

[clt]
epsilon = 0.001
replicas = 10000
t = 1
)";

Outcome criterion_corrector(std::uint64_t seed) {
    std::ostringstream log;
    const PhiCheckReport rep = run_phi_check(seed, log);
    Outcome o;
    o.pass = rep.pass && rep.max_rel_gap <= 1e-9 && rep.max_fredholm <= 1e-12 &&
             rep.max_centering <= 1e-12;
    o.detail = std::to_string(rep.instances) + " instances, rel gap " + num(rep.max_rel_gap) +
               ", fredholm " + num(rep.max_fredholm) + ", centering " + num(rep.max_centering);
    return o;
}

Outcome criterion_closed_forms(std::uint64_t seed) {
    MLParameters p;
    p.N_K = 5;
    const ChannelModel model = ml_channel_model(p);
    auto basis = SpectralBasis::dirichlet_sine(16);
    ChannelLayout layout;
    layout.positions.resize(5);
    layout.weights.resize(5);
    for (int i = 0; i < 5; ++i) {
        layout.positions[i] = (i + 1) / 6.0;
        layout.weights[i] = 1.0 / (5.0 * p.length);
    }
    const SourceGeometry geom = SourceGeometry::pointlike(basis, layout);
    const std::vector<int> classes(5, 0);

    RngStream rng(seed, 2, 0);
    double gap_phi = 0.0, gap_s = 0.0, gap_c = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd u(16);
        for (int k = 0; k < 16; ++k) u[k] = rng.uniform(-40.0, 40.0) / ((k + 1) * (k + 1));
        const Eigen::VectorXd y = geom.W.transpose() * u;

        const Eigen::MatrixXd tab = ml_phi_table(p, y);
        for (int i = 0; i < 5; ++i) {
            const ChannelPoisson cp = solve_channel(model, 0, y[i]);
            const double scale = std::max(1.0, cp.phi.cwiseAbs().maxCoeff());
            gap_phi = std::max(gap_phi, std::abs(tab(i, 0) - cp.phi[0]) / scale);
            gap_phi = std::max(gap_phi, std::abs(tab(i, 1) - cp.phi[1]) / scale);

            const double al = model.rate_value(0, 1, y[i]);
            const double be = model.rate_value(1, 0, y[i]);
            const double sc = p.c_K * p.c_K * (p.v_K - y[i]) * (p.v_K - y[i]) * al * be /
                              std::pow(al + be, 3);
            gap_s = std::max(gap_s, std::abs(cp.s - sc) / std::max(1.0, sc));
        }

        const DiffusionOperator closed = ml_diffusion_closed_form(p, geom, u);
        const DiffusionOperator generic = diffusion_matrix(u, classes, model, geom);
        const double amax = std::max(1.0, generic.a.cwiseAbs().maxCoeff());
        gap_c = std::max(gap_c, (closed.a - generic.a).cwiseAbs().maxCoeff() / amax);
        gap_c = std::max(gap_c, (closed.paper() - generic.paper()).cwiseAbs().maxCoeff() / amax);
        gap_c = std::max(gap_c, (closed.s - generic.s).cwiseAbs().maxCoeff() /
                                    std::max(1.0, generic.s.maxCoeff()));
    }
    Outcome o;
    o.pass = gap_phi <= 1e-12 && gap_s <= 1e-12 && gap_c <= 1e-12;
    o.detail = "100 states, rel gaps: phi " + num(gap_phi) + ", variance " + num(gap_s) +
               ", operator " + num(gap_c);
    return o;
}

Outcome criterion_positivity(std::uint64_t seed) {
    const std::vector<RateForm> rates = {RateForm::zero(), RateForm::constant(1.1),
                                         RateForm::constant(0.6), RateForm::zero()};
    Eigen::VectorXd cond(2), rev(2);
    cond << 0.0, 1.0;
    rev << 0.0, -1.0;
    const ChannelModel model({"C", "O"}, {0, 0}, cond, rev, rates, 0.6, 1.1);
    auto basis = SpectralBasis::dirichlet_sine(12);
    const SourceGeometry geom = SourceGeometry::pointlike(basis, ChannelLayout::regular(6));
    const std::vector<int> classes(6, 0);

    RngStream rng(seed, 3, 0);
    double min_trace = std::numeric_limits<double>::infinity();
    double min_eig = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd u(12);
        for (int k = 0; k < 12; ++k) u[k] = rng.uniform(-1.0, 1.0) / (k + 1);
        const DiffusionOperator op = diffusion_matrix(u, classes, model, geom);
        min_trace = std::min(min_trace, op.paper().trace());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.a, Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    Outcome o;
    o.pass = min_trace >= 0.0 && min_eig >= -1e-12;
    o.detail = "100 states, min trace " + num(min_trace) + ", min eigenvalue " + num(min_eig);
    return o;
}

Outcome criterion_green_kubo(std::uint64_t seed) {
    ExperimentConfig cfg = parse_config_text(kGreenKuboConfig, "acceptance");
    cfg.seed = seed;
    std::ostringstream csv;
    const std::vector<CltRow> rows = run_clt_check(cfg, csv);
    double worst = 0.0;
    bool ok = !rows.empty();
    for (const CltRow& r : rows) {
        ok = ok && r.predicted_var > 0.0 && r.ratio >= 0.9 && r.ratio <= 1.1;
        worst = std::max(worst, std::abs(r.ratio - 1.0));
    }
    Outcome o;
    o.pass = ok;
    o.detail = std::to_string(rows.size()) + " channels, max |ratio-1| = " + num(worst) +
               " (predicted " + (rows.empty() ? "-" : num(rows[0].predicted_var, "%.6g")) + ")";
    return o;
}

Outcome criterion_trace_bound(std::uint64_t /*seed*/) {
    ExperimentConfig cfg;  // Morris-Lecar defaults
    std::ostringstream csv;
    const std::vector<TraceRow> rows = run_trace_series(cfg, csv);
    bool under = !rows.empty();
    double margin = std::numeric_limits<double>::infinity();
    for (const TraceRow& r : rows) {
        under = under && std::isfinite(r.paper_bound) &&
                r.trace + r.tail_bound <= r.paper_bound;
        margin = std::min(margin, r.paper_bound - r.trace - r.tail_bound);
    }

    // constant diagonal: the kernel quadrature must reproduce
    // sum_k D_k (1 - e^{-2 nu lambda_k t}) / (2 nu lambda_k) exactly
    auto basis = SpectralBasis::dirichlet_sine(32);
    const int G = 65;
    Eigen::VectorXd times(G);
    for (int j = 0; j < G; ++j) times[j] = j / double(G - 1);
    Eigen::VectorXd D(32);
    for (int k = 0; k < 32; ++k) D[k] = 1.0 / (1.0 + k);
    const std::vector<Eigen::VectorXd> diag(G, D);
    const double nu = 1.0;
    double quad_gap = 0.0;
    for (double t : {0.3, 1.0}) {
        const TraceResult tr = trace_Q(times, diag, t, nu, *basis);
        double exact = 0.0;
        for (int k = 1; k <= 32; ++k) {
            const double lam = basis->eigenvalue(k);
            exact += D[k - 1] * (1.0 - std::exp(-2.0 * nu * lam * t)) / (2.0 * nu * lam);
        }
        quad_gap = std::max(quad_gap, std::abs(tr.value - exact) / exact);
    }

    Outcome o;
    o.pass = under && quad_gap <= 1e-10;
    o.detail = std::to_string(rows.size()) + " grid points under bound (min margin " +
               num(margin) + "), constant-diagonal quadrature gap " + num(quad_gap);
    return o;
}

Outcome criterion_averaging(std::uint64_t seed) {
    ExperimentConfig cfg;  // defaults: Morris-Lecar, eps {1,0.1,0.01,0.001}, 100 replicas
    cfg.seed = seed;
    std::ostringstream csv;
    const std::vector<SweepRow> rows = run_epsilon_sweep(cfg, csv);
    if (rows.size() != 4) return {false, "expected 4 sweep rows"};
    const double ratio = rows.front().mean_sup_err / rows.back().mean_sup_err;
    bool mono = true;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double slack = std::sqrt(rows[i].stderr_mean * rows[i].stderr_mean +
                                       rows[i + 1].stderr_mean * rows[i + 1].stderr_mean);
        mono = mono && rows[i + 1].mean_sup_err <= rows[i].mean_sup_err + slack;
    }
    Outcome o;
    o.pass = ratio >= 3.0 && mono;
    std::string means;
    for (const SweepRow& r : rows)
        means += (means.empty() ? "" : ", ") + num(r.mean_sup_err, "%.4g");
    o.detail = "mean sup error {" + means + "}, ratio eps=1 vs 1e-3 = " + num(ratio) +
               (mono ? ", nonincreasing" : ", NOT nonincreasing");
    return o;
}

Outcome criterion_langevin_rate(std::uint64_t seed) {
    const MLModel m = ml_model();
    const std::vector<double> eps = {1e-1, 1e-2, 1e-3};
    const int R = 100;

    const HybridSimulator ref_sim(m.scenario, m.config);
    std::vector<std::unique_ptr<HybridSimulator>> lang;
    for (double e : eps) {
        SimConfig c = m.config;
        c.epsilon = e;
        lang.push_back(std::make_unique<HybridSimulator>(m.scenario, c));
    }

    std::vector<double> acc(eps.size(), 0.0);
    for (int r = 0; r < R; ++r) {
        const Trajectory ref = ref_sim.run_averaged(seed, r);
        for (std::size_t j = 0; j < eps.size(); ++j) {
            const Trajectory lt = lang[j]->run_langevin(seed, r);
            double sup = 0.0;
            for (int row = 0; row < ref.coeffs.rows(); ++row)
                sup = std::max(sup,
                               (lt.coeffs.row(row) - ref.coeffs.row(row)).squaredNorm());
            acc[j] += sup;
        }
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const int n = static_cast<int>(eps.size());
    for (int j = 0; j < n; ++j) {
        const double x = std::log(eps[j]);
        const double y = std::log(acc[j] / R);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    Outcome o;
    o.pass = slope >= 0.7 && slope <= 1.3;
    std::string means;
    for (int j = 0; j < n; ++j)
        means += (means.empty() ? "" : ", ") + num(acc[j] / R, "%.4g");
    o.detail = "E sup |u - u_eps|^2 {" + means + "}, log-log slope " + num(slope, "%.3f");
    return o;
}

// Poisson(2) unit-window chi-square over bins 0..7 plus tail, 8 dof
constexpr double kChi2Crit99Dof8 = 20.0902;
// asymptotic Kolmogorov critical coefficient at the 1% level
constexpr double kKsCoeff99 = 1.6276;

Outcome criterion_jump_law(std::uint64_t seed) {
    Eigen::VectorXd silent = Eigen::VectorXd::Zero(2);
    const std::vector<RateForm> sym_rates = {RateForm::zero(), RateForm::constant(2.0),
                                             RateForm::constant(2.0), RateForm::zero()};
    const ChannelModel sym({"a", "b"}, {0, 0}, silent, silent, sym_rates, 2.0, 2.0);

    Scenario sc;
    sc.model = sym;
    sc.layout = ChannelLayout::regular(1);
    SimConfig cf;
    cf.mode_count = 4;
    cf.horizon = 15000.0;
    cf.epsilon = 1.0;
    cf.frozen_u = true;
    cf.output_points = 8;

    const Trajectory tr = HybridSimulator(sc, cf).run_pdmp(seed, 11);
    const int windows = 15000;
    std::vector<int> counts(windows, 0);
    std::vector<double> gaps;
    gaps.reserve(tr.jumps.size());
    double prev = 0.0;
    for (const JumpEvent& ev : tr.jumps) {
        ++counts[std::min(windows - 1, static_cast<int>(ev.t))];
        gaps.push_back(ev.t - prev);
        prev = ev.t;
    }

    // bin probabilities for Poisson(2); expected counts stay above 5
    std::vector<double> pk(9, 0.0);
    double cum = 0.0, term = std::exp(-2.0);
    for (int k = 0; k <= 7; ++k) {
        pk[k] = term;
        cum += term;
        term *= 2.0 / (k + 1);
    }
    pk[8] = 1.0 - cum;
    std::vector<int> obs(9, 0);
    for (int c : counts) ++obs[std::min(c, 8)];
    double chi2 = 0.0;
    for (int k = 0; k < 9; ++k) {
        const double e = windows * pk[k];
        chi2 += (obs[k] - e) * (obs[k] - e) / e;
    }

    std::sort(gaps.begin(), gaps.end());
    const int n = static_cast<int>(gaps.size());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double F = 1.0 - std::exp(-2.0 * gaps[i]);
        ks = std::max(ks, std::max(std::abs(F - (i + 1) / double(n)),
                                   std::abs(F - i / double(n))));
    }
    const double ks_crit = kKsCoeff99 / std::sqrt(double(n));

    // occupancy of the conducting state against mu = alpha/(alpha+beta)
    const std::vector<RateForm> asym_rates = {RateForm::zero(), RateForm::constant(1.3),
                                              RateForm::constant(0.7), RateForm::zero()};
    sc.model = ChannelModel({"a", "b"}, {0, 0}, silent, silent, asym_rates, 0.7, 1.3);
    cf.horizon = 40.0;
    const HybridSimulator occ_sim(sc, cf);
    const int R = 400;
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < R; ++r) {
        const Trajectory t2 = occ_sim.run_pdmp(seed, 1000 + r);
        double open_time = 0.0, t_prev = 0.0;
        int s = 0;
        for (const JumpEvent& ev : t2.jumps) {
            if (s == 1) open_time += ev.t - t_prev;
            s = ev.to;
            t_prev = ev.t;
        }
        if (s == 1) open_time += cf.horizon - t_prev;
        const double frac = open_time / cf.horizon;
        sum += frac;
        sumsq += frac * frac;
    }
    const double mean = sum / R;
    const double sd = std::sqrt(std::max(0.0, sumsq / R - mean * mean));
    const double se = sd / std::sqrt(double(R));
    const double mu_open = 1.3 / 2.0;
    const bool occ_ok = std::abs(mean - mu_open) <= 3.0 * se;

    Outcome o;
    o.pass = chi2 < kChi2Crit99Dof8 && ks < ks_crit && occ_ok;
    o.detail = "chi2 " + num(chi2, "%.2f") + " (crit " + num(kChi2Crit99Dof8, "%.2f") +
               "), KS " + num(ks) + " (crit " + num(ks_crit) + ", n=" + std::to_string(n) +
               "), occupancy " + num(mean, "%.4f") + " vs " + num(mu_open, "%.4f") + " +- " +
               num(3.0 * se);
    return o;
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str() && !sa.str().empty();
}

Outcome criterion_replay(std::uint64_t seed, const std::string& cli) {
    ExperimentConfig cfg = parse_config_text(kSmallConfig, "acceptance");
    cfg.seed = seed;

    bool lib = true;
    {
        std::ostringstream a, b;
        run_epsilon_sweep(cfg, a);
        run_epsilon_sweep(cfg, b);
        lib = lib && !a.str().empty() && a.str() == b.str();
    }
    {
        std::ostringstream a, b;
        run_clt_check(cfg, a);
        run_clt_check(cfg, b);
        lib = lib && !a.str().empty() && a.str() == b.str();
    }
    {
        std::ostringstream a, b;
        run_trace_series(cfg, a);
        run_trace_series(cfg, b);
        lib = lib && !a.str().empty() && a.str() == b.str();
    }
    {
        const ResolvedExperiment res = resolve_experiment(cfg);
        const HybridSimulator s1(res.scenario, res.sim), s2(res.scenario, res.sim);
        std::ostringstream a, b;
        write_trajectory_csv(s1, s1.run_pdmp(cfg.seed, 0), cfg.probes, false, a);
        write_trajectory_csv(s2, s2.run_pdmp(cfg.seed, 0), cfg.probes, false, b);
        lib = lib && !a.str().empty() && a.str() == b.str();
    }

    Outcome o;
    if (cli.empty()) {
        o.pass = lib;
        o.detail = std::string("library outputs byte-identical: ") + (lib ? "yes" : "NO") +
                   " (cli not provided, skipped)";
        return o;
    }

    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "pdmp_replay";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_path = root / "small.cfg";
    std::ofstream(cfg_path) << kSmallConfig;

    bool cli_ok = true;
    for (const char* sub : {"sweep", "simulate", "clt"}) {
        const fs::path d1 = root / (std::string(sub) + "_1");
        const fs::path d2 = root / (std::string(sub) + "_2");
        for (const fs::path& d : {d1, d2}) {
            const std::string cmd = "\"" + cli + "\" " + sub + " --config \"" +
                                    cfg_path.string() + "\" --seed " + std::to_string(seed) +
                                    " --out \"" + d.string() + "\" > /dev/null";
            if (std::system(cmd.c_str()) != 0) cli_ok = false;
        }
        const char* file = std::string(sub) == "sweep"      ? "sweep.csv"
                           : std::string(sub) == "simulate" ? "trajectory.csv"
                                                            : "clt.csv";
        cli_ok = cli_ok && same_bytes(d1 / file, d2 / file);
    }

    o.pass = lib && cli_ok;
    o.detail = std::string("library byte-identical: ") + (lib ? "yes" : "NO") +
               ", cli reruns byte-identical: " + (cli_ok ? "yes" : "NO");
    return o;
}

int count_upcrossings(const Eigen::VectorXd& u, double lo, double hi) {
    bool armed = u[0] < lo;
    int n = 0;
    for (int i = 0; i < u.size(); ++i) {
        if (armed && u[i] >= hi) {
            ++n;
            armed = false;
        } else if (!armed && u[i] <= lo) {
            armed = true;
        }
    }
    return n;
}

Outcome criterion_stimulus_response(std::uint64_t seed) {
    const MLModel m = ml_model();
    const HybridSimulator sim(m.scenario, m.config);
    const Eigen::VectorXd fx = sim.basis()->evaluate_all(0.2);  // mid-stimulus probe

    const Trajectory avg = sim.run_averaged(seed, 0);
    const Eigen::VectorXd ua = avg.coeffs * fx;
    const double base = ua[ua.size() - 1];
    const double lo = base + 3.0, hi = base + 10.0;

    double post_sup = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < ua.size(); ++j)
        if (avg.times[j] >= 0.25 * m.config.horizon) post_sup = std::max(post_sup, ua[j]);
    const int avg_spikes = count_upcrossings(ua, lo, hi);
    const bool excursions = avg_spikes >= 1 && post_sup >= hi;

    const std::vector<double> eps = {1.0, 0.1, 0.01, 1e-3, 1e-4};
    std::vector<int> spikes;
    for (double e : eps) {
        SimConfig c = m.config;
        c.epsilon = e;
        const Trajectory tr = HybridSimulator(m.scenario, c).run_pdmp(seed, 3);
        spikes.push_back(count_upcrossings(tr.coeffs * fx, lo, hi));
    }
    bool nondecreasing = true;
    for (std::size_t i = 0; i + 1 < spikes.size(); ++i)
        nondecreasing = nondecreasing && spikes[i + 1] >= spikes[i];

    Outcome o;
    o.pass = excursions && nondecreasing;
    std::string counts;
    for (int s : spikes) counts += (counts.empty() ? "" : ", ") + std::to_string(s);
    o.detail = "averaged: " + std::to_string(avg_spikes) + " excursions above base+10 (base " +
               num(base, "%.2f") + ", post-transient sup " + num(post_sup, "%.2f") +
               "); spike counts over eps {1..1e-4}: {" + counts + "}" +
               (nondecreasing ? ", nondecreasing" : ", not monotone");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    std::string cli;
    std::uint64_t seed = 42;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            which.push_back(std::atoi(argv[++i]));
        } else if (arg == "--cli" && i + 1 < argc) {
            cli = argv[++i];
        } else if (arg == "--seed" && i + 1 < argc) {
            seed = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N ...] [--cli PATH] [--seed U64]\n");
            return 2;
        }
    }
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    struct Entry {
        const char* name;
        std::function<Outcome()> run;
        bool blocking;
    };
    const std::vector<Entry> entries = {
        {"corrector equivalence", [&] { return criterion_corrector(seed); }, true},
        {"closed forms", [&] { return criterion_closed_forms(seed); }, true},
        {"positivity / PSD", [&] { return criterion_positivity(seed); }, true},
        {"Green-Kubo variance", [&] { return criterion_green_kubo(seed); }, true},
        {"trace bound", [&] { return criterion_trace_bound(seed); }, true},
        {"averaging trend", [&] { return criterion_averaging(seed); }, true},
        {"Langevin rate", [&] { return criterion_langevin_rate(seed); }, true},
        {"jump law", [&] { return criterion_jump_law(seed); }, true},
        {"deterministic replay", [&] { return criterion_replay(seed, cli); }, true},
        {"stimulus response", [&] { return criterion_stimulus_response(seed); }, false},
    };

    bool all_ok = true;
    for (int id : which) {
        if (id < 1 || id > static_cast<int>(entries.size())) {
            std::fprintf(stderr, "no criterion %d\n", id);
            return 2;
        }
        const Entry& e = entries[id - 1];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* verdict = o.pass ? "PASS " : (e.blocking ? "FAIL " : "FAIL*");
        std::printf("[%2d] %s %-22s %s (%.1fs)\n", id, verdict, e.name, o.detail.c_str(), dt);
        std::fflush(stdout);
        if (!o.pass && e.blocking) all_ok = false;
        if (!o.pass && !e.blocking)
            std::printf("     * qualitative check, reported but not counted\n");
    }
    return all_ok ? 0 : 1;
}
