#include "pdmp/fluctuation.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <unsupported/Eigen/MatrixFunctions>

#include "pdmp/quadrature.hpp"

namespace pdmp {

namespace {

Eigen::VectorXd centered(const Eigen::VectorXd& d, const Eigen::VectorXd& mu) {
    return d.array() - mu.dot(d);
}

}  // namespace

Eigen::VectorXd solve_phi_linear(const GeneratorMatrix& gen, const Eigen::VectorXd& d,
                                 const QuasiStationary& mu) {
    const int n = static_cast<int>(gen.Q.rows());
    if (d.size() != n || mu.p.size() != n) throw ConfigError("solve_phi_linear size mismatch");
    const Eigen::VectorXd dc = centered(d, mu.p);

    const Eigen::MatrixXd M = mu.p * mu.p.transpose() + gen.Q.transpose() * gen.Q;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success)
        throw InvariantError("phi solve: augmented system is singular");
    Eigen::VectorXd phi = ldlt.solve(-gen.Q.transpose() * dc);

    // one refinement pass drives the Fredholm residuals to rounding level
    const Eigen::VectorXd r1 = -dc - gen.Q * phi;
    const double r2 = -mu.p.dot(phi);
    phi += ldlt.solve(gen.Q.transpose() * r1 + mu.p * r2);
    return phi;
}

Eigen::VectorXd solve_phi_integral(const GeneratorMatrix& gen, const Eigen::VectorXd& d,
                                   const IntegralPolicy& policy) {
    const int n = static_cast<int>(gen.Q.rows());
    if (d.size() != n) throw ConfigError("solve_phi_integral size mismatch");
    const QuasiStationary mu = quasi_stationary(gen);
    const Eigen::VectorXd dc = centered(d, mu.p);
    if (n == 1) return Eigen::VectorXd::Zero(1);

    if (!policy.quadrature) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(gen.Q);
        if (es.info() != Eigen::Success) throw InvariantError("eigendecomposition failed");
        const auto& ev = es.eigenvalues();
        int null_idx = 0;
        for (int m = 1; m < n; ++m)
            if (std::abs(ev[m]) < std::abs(ev[null_idx])) null_idx = m;
        for (int m = 0; m < n; ++m) {
            if (m == null_idx) continue;
            if (!(ev[m].real() < 0.0) || std::abs(ev[m].real()) < policy.gap_tol)
                throw InvariantError("spectral gap below tolerance");
        }
        const Eigen::MatrixXcd V = es.eigenvectors();
        const Eigen::VectorXcd coef = V.partialPivLu().solve(dc.cast<std::complex<double>>());
        Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(n);
        for (int m = 0; m < n; ++m) {
            if (m == null_idx) continue;  // centered data carries no null component
            phi -= (coef[m] / ev[m]) * V.col(m);
        }
        if (phi.imag().cwiseAbs().maxCoeff() >
            1e-9 * std::max(1.0, phi.real().cwiseAbs().maxCoeff()))
            throw InvariantError("integral representation returned non-real phi");
        return phi.real();
    }

    // quadrature fallback: panels of Gauss-Legendre nodes with exact e^{Qs}
    // node propagators, integrating until the integrand has decayed
    const double scale = gen.Q.diagonal().cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) return Eigen::VectorXd::Zero(n);
    const double h = 0.5 / scale;
    const GaussRule& rule = GaussRule::order24();
    std::vector<Eigen::MatrixXd> node_prop;
    node_prop.reserve(rule.nodes.size());
    for (double node : rule.nodes)
        node_prop.push_back((gen.Q * (0.5 * h * (node + 1.0))).exp().eval());
    const Eigen::MatrixXd panel_prop = (gen.Q * h).exp();

    const double stop = policy.tail_tol * std::max(1.0, dc.cwiseAbs().maxCoeff());
    Eigen::VectorXd m = dc;
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    for (long panel = 0; panel < 2000000; ++panel) {
        if (m.cwiseAbs().maxCoeff() <= stop) return phi;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            phi += (0.5 * h * rule.weights[q]) * (node_prop[q] * m);
        m = panel_prop * m;
    }
    throw InvariantError("integral representation did not converge (gap too small)");
}

double channel_variance(const Eigen::VectorXd& mu, const Eigen::VectorXd& d,
                        const Eigen::VectorXd& phi) {
    if (mu.size() != d.size() || d.size() != phi.size())
        throw ConfigError("channel_variance size mismatch");
    double s = 0.0;
    for (int i = 0; i < mu.size(); ++i) s += mu[i] * d[i] * phi[i];
    if (s < 0.0) {
        if (s < -1e-12) throw InvariantError("channel variance negative beyond tolerance");
        s = 0.0;
    }
    return s;
}

ChannelPoisson solve_channel(const ChannelModel& model, int cls, double y) {
    const auto& members = model.states_in_class(cls);
    const int n = static_cast<int>(members.size());
    ChannelPoisson out;
    if (n == 1) {
        out.mu = Eigen::VectorXd::Ones(1);
        out.d = Eigen::VectorXd::Zero(1);
        out.phi = Eigen::VectorXd::Zero(1);
        out.s = 0.0;
        return out;
    }
    const GeneratorMatrix gen = generator_matrix(model, y, cls);
    const QuasiStationary mu = quasi_stationary(gen);
    Eigen::VectorXd g(n);
    for (int a = 0; a < n; ++a)
        g[a] = model.conductance(members[a]) * (model.reversal(members[a]) - y);
    out.d = centered(g, mu.p);
    out.phi = solve_phi_linear(gen, out.d, mu);
    out.mu = mu.p;
    out.s = channel_variance(out.mu, out.d, out.phi);
    return out;
}

Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& a, double tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw InvariantError("psd check: eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.minCoeff() >= 0.0) return a;
    if (ev.minCoeff() < -tol)
        throw InvariantError("matrix not PSD: eigenvalue " + std::to_string(ev.minCoeff()));
    Eigen::VectorXd clipped = ev.cwiseMax(0.0);
    return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

DiffusionOperator diffusion_matrix(const Eigen::VectorXd& coeffs,
                                   const std::vector<int>& classes, const ChannelModel& model,
                                   const SourceGeometry& geom) {
    const int N = geom.n_channels();
    const int K = geom.n_modes();
    if (static_cast<int>(classes.size()) != N || coeffs.size() != K)
        throw ConfigError("diffusion_matrix size mismatch");
    const Eigen::VectorXd y = geom.W.transpose() * coeffs;
    DiffusionOperator op;
    op.factor.setZero(K, N);
    op.s.resize(N);
    for (int i = 0; i < N; ++i) {
        const ChannelPoisson cp = solve_channel(model, classes[i], y[i]);
        op.s[i] = cp.s;
        op.factor.col(i) = std::sqrt(2.0 * cp.s) * geom.layout.weights[i] * geom.W.col(i);
    }
    op.a = op.factor * op.factor.transpose();
    // eigenvalue debris of the rank-deficient Gram scales with |a|, so the
    // repair threshold must too; a is PSD by construction at any scale
    op.a = psd_clip(op.a, 1e-12 * std::max(1.0, op.a.diagonal().maxCoeff()));
    return op;
}

DiffusionFactor::DiffusionFactor(const ChannelModel& model, const SourceGeometry& geom)
    : model_(model), geom_(geom) {
    M_.setZero(geom.n_modes(), geom.n_channels());
    s_.setZero(geom.n_channels());
}

const Eigen::MatrixXd& DiffusionFactor::refresh(const Eigen::VectorXd& voltages,
                                                const std::vector<int>& classes) {
    for (int i = 0; i < geom_.n_channels(); ++i) {
        const int cls = classes[i];
        if (model_.states_in_class(cls).size() == 1) {
            s_[i] = 0.0;
            M_.col(i).setZero();
            continue;
        }
        const ChannelPoisson cp = solve_channel(model_, cls, voltages[i]);
        s_[i] = cp.s;
        M_.col(i) = std::sqrt(2.0 * cp.s) * geom_.layout.weights[i] * geom_.W.col(i);
    }
    return M_;
}

Eigen::VectorXd trace_diag(const Eigen::VectorXd& coeffs, const std::vector<int>& classes,
                           const ChannelModel& model, const SourceGeometry& geom) {
    const Eigen::VectorXd y = geom.W.transpose() * coeffs;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(geom.n_modes());
    for (int i = 0; i < geom.n_channels(); ++i) {
        const ChannelPoisson cp = solve_channel(model, classes[i], y[i]);
        const double w2 = geom.layout.weights[i] * geom.layout.weights[i];
        diag += (w2 * cp.s) * geom.W.col(i).cwiseAbs2();
    }
    return diag;
}

TraceResult trace_Q(const Eigen::VectorXd& times, const std::vector<Eigen::VectorXd>& diag,
                    double t, double nu, const SpectralBasis& basis, double sup_diag_bound) {
    const int G = static_cast<int>(times.size());
    if (G < 2 || static_cast<int>(diag.size()) != G) throw ConfigError("trace_Q grid mismatch");
    if (std::abs(times[0]) > 1e-15) throw ConfigError("trace_Q grid must start at 0");
    if (t < 0.0 || t > times[G - 1] + 1e-12) throw ConfigError("trace_Q: t outside horizon");
    const int K = basis.mode_count();
    const Eigen::ArrayXd r = 2.0 * nu * basis.eigenvalues().array();

    TraceResult out;
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(K);
    double sup_diag = 0.0;
    for (int j = 0; j + 1 < G && times[j] < t; ++j) {
        const double s0 = times[j];
        const double s1 = std::min(times[j + 1], t);
        const double span = times[j + 1] - times[j];
        const Eigen::ArrayXd& c0 = diag[j].array();
        const Eigen::ArrayXd c1full = diag[j + 1].array();
        // clip the last interval at t by linear interpolation
        const Eigen::ArrayXd c1 =
            (s1 < times[j + 1]) ? (c0 + (c1full - c0) * ((s1 - s0) / span)).eval() : c1full;
        const double tau0 = t - s0;
        const double tau1 = t - s1;
        const Eigen::ArrayXd B = (c0 - c1) / (s1 - s0);
        // exact integral of e^{-r tau} (A + B tau) over [tau1, tau0]
        acc += (c1 / r + B / (r * r)) * (-r * tau1).exp() -
               (c0 / r + B / (r * r)) * (-r * tau0).exp();
        sup_diag = std::max(sup_diag, c0.maxCoeff());
        sup_diag = std::max(sup_diag, c1full.maxCoeff());
    }
    out.value = acc.sum();

    if (basis.is_sine()) {
        double sum_inv = 0.0;  // sum_{k>K} 1/k^2 = pi^2/6 - H^(2)_K
        for (int k = K; k >= 1; --k) sum_inv += 1.0 / (static_cast<double>(k) * k);
        const double tail_series = (M_PI * M_PI / 6.0 - sum_inv) / (M_PI * M_PI);
        const double bound = sup_diag_bound > 0.0 ? sup_diag_bound : sup_diag;
        out.tail_bound = bound * tail_series / (2.0 * nu);
    } else {
        out.tail_bound = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

TraceBoundConstants mollified_trace_constants(const ChannelModel& model,
                                              const SourceGeometry& geom, double y_lo,
                                              double y_hi, double step) {
    double sigma_min = std::numeric_limits<double>::infinity();
    double amp = 0.0;  // max over classes of 4 n c_max^2
    double vmax = 0.0;
    for (int j = 0; j < model.n_classes(); ++j) {
        const auto& members = model.states_in_class(j);
        const int n = static_cast<int>(members.size());
        if (n == 1) continue;  // singleton classes carry no fluctuation
        double cmax = 0.0;
        for (int s : members) {
            cmax = std::max(cmax, model.conductance(s));
            vmax = std::max(vmax, std::abs(model.reversal(s)));
        }
        amp = std::max(amp, 4.0 * n * cmax * cmax);
        for (double y = y_lo; y <= y_hi + 1e-9; y += step) {
            const GeneratorMatrix gen = generator_matrix(model, y, j);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(gen.Q);
            const double snz = svd.singularValues()(n - 2);  // smallest nonzero
            if (snz < 1e-12) throw InvariantError("trace constants: class not irreducible");
            sigma_min = std::min(sigma_min, snz);
        }
    }
    TraceBoundConstants out;
    if (!(amp > 0.0)) return out;  // no noisy class

    double ctot = 0.0, pmax = 0.0;
    for (int i = 0; i < geom.n_channels(); ++i) {
        const double p = geom.source_norms[i];
        ctot += geom.layout.weights[i] * geom.layout.weights[i] * p * p;
        pmax = std::max(pmax, p);
    }
    const double A = amp / sigma_min;
    out.alpha = ctot * A * pmax * pmax;
    out.beta = 2.0 * ctot * A * vmax * pmax;
    out.gamma = ctot * A * vmax * vmax;
    return out;
}

}  // namespace pdmp
