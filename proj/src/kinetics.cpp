#include "pdmp/kinetics.hpp"

#include <algorithm>
#include <cmath>

namespace pdmp {

RateForm RateForm::constant(double value) {
    if (!(value > 0.0)) throw ConfigError("constant rate must be positive (use zero())");
    RateForm r;
    r.kind = Kind::Constant;
    r.a = value;
    return r;
}

RateForm RateForm::ml_open(double lambda_w, double v3, double v4, double floor) {
    if (!(lambda_w > 0.0) || v4 == 0.0) throw ConfigError("bad ml_open parameters");
    RateForm r;
    r.kind = Kind::MLOpen;
    r.a = lambda_w;
    r.b = v3;
    r.c = v4;
    r.floor = floor;
    return r;
}

RateForm RateForm::ml_close(double lambda_w, double v3, double v4, double floor) {
    RateForm r = ml_open(lambda_w, v3, v4, floor);
    r.kind = Kind::MLClose;
    return r;
}

RateForm RateForm::function(std::function<double(double)> f) {
    if (!f) throw ConfigError("empty rate function");
    RateForm r;
    r.kind = Kind::Custom;
    r.custom = std::move(f);
    return r;
}

double RateForm::operator()(double y) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Constant:
            return a;
        case Kind::MLOpen: {
            // (1 + tanh x)/2 = 1/(1 + e^{-2x}), overflow-safe for all x
            const double x = (y - b) / c;
            return std::max(floor, a * std::cosh(0.5 * x) / (1.0 + std::exp(-2.0 * x)));
        }
        case Kind::MLClose: {
            const double x = (y - b) / c;
            return std::max(floor, a * std::cosh(0.5 * x) / (1.0 + std::exp(2.0 * x)));
        }
        case Kind::Custom:
            return custom(y);
    }
    return 0.0;
}

ChannelModel::ChannelModel(std::vector<std::string> state_names, std::vector<int> state_class,
                           Eigen::VectorXd conductance, Eigen::VectorXd reversal,
                           std::vector<RateForm> rates, double alpha_min, double alpha_max)
    : names_(std::move(state_names)),
      state_class_(std::move(state_class)),
      cond_(std::move(conductance)),
      rev_(std::move(reversal)),
      rates_(std::move(rates)),
      alpha_min_(alpha_min),
      alpha_max_(alpha_max) {
    const int n = n_states();
    if (n < 1) throw ConfigError("channel model needs at least one state");
    if (static_cast<int>(state_class_.size()) != n || cond_.size() != n || rev_.size() != n ||
        static_cast<int>(rates_.size()) != n * n)
        throw ConfigError("channel model size mismatch");
    if (!(alpha_min_ > 0.0) || !(alpha_max_ >= alpha_min_))
        throw ConfigError("need 0 < alpha_min <= alpha_max");
    for (int s = 0; s < n; ++s)
        if (cond_[s] < 0.0) throw ConfigError("conductances must be nonnegative");

    const int l = 1 + *std::max_element(state_class_.begin(), state_class_.end());
    class_states_.assign(l, {});
    for (int s = 0; s < n; ++s) {
        if (state_class_[s] < 0 || state_class_[s] >= l) throw ConfigError("bad class index");
        class_states_[state_class_[s]].push_back(s);
    }
    for (const auto& members : class_states_)
        if (members.empty()) throw ConfigError("empty channel class");

    targets_.assign(n, {});
    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t)
            if (t != s && !rate(s, t).is_zero() && state_class_[t] == state_class_[s])
                targets_[s].push_back(t);
        for (int t = 0; t < n; ++t)
            if (t != s && !rate(s, t).is_zero() && state_class_[t] != state_class_[s])
                targets_[s].push_back(t);
    }
}

void ChannelModel::validate(double y_lo, double y_hi, double step) const {
    const int n = n_states();
    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
            if (s == t || rate(s, t).is_zero()) continue;
            double prev = 0.0, prev_d = 0.0;
            bool have_prev = false, have_prev_d = false;
            for (double y = y_lo; y <= y_hi + 1e-9; y += step) {
                const double v = rate_value(s, t, y);
                if (!(v >= alpha_min_ && v <= alpha_max_))
                    throw InvariantError("rate " + names_[s] + "->" + names_[t] +
                                         " leaves [alpha_min, alpha_max] at y=" +
                                         std::to_string(y));
                if (have_prev) {
                    const double d = (v - prev) / step;
                    if (!std::isfinite(d) || std::abs(d) > 1e6)
                        throw InvariantError("rate derivative unbounded on grid");
                    if (have_prev_d && std::abs(d - prev_d) / step > 1e8)
                        throw InvariantError("rate derivative not Lipschitz on grid");
                    prev_d = d;
                    have_prev_d = true;
                }
                prev = v;
                have_prev = true;
            }
        }
    }
}

GeneratorMatrix generator_matrix(const ChannelModel& model, double y, int j) {
    if (j < 0 || j >= model.n_classes()) throw ConfigError("class index out of range");
    const auto& members = model.states_in_class(j);
    const int n = static_cast<int>(members.size());
    GeneratorMatrix g;
    g.voltage = y;
    g.states = members;
    g.Q.setZero(n, n);
    for (int a = 0; a < n; ++a) {
        double out = 0.0;
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            const double v = model.rate_value(members[a], members[b], y);
            g.Q(a, b) = v;
            out += v;
        }
        g.Q(a, a) = -out;
    }
    return g;
}

GeneratorMatrix full_generator(const ChannelModel& model, double y) {
    const int n = model.n_states();
    GeneratorMatrix g;
    g.voltage = y;
    g.states.resize(n);
    for (int s = 0; s < n; ++s) g.states[s] = s;
    g.Q.setZero(n, n);
    for (int a = 0; a < n; ++a) {
        double out = 0.0;
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            const double v = model.rate_value(a, b, y);
            g.Q(a, b) = v;
            out += v;
        }
        g.Q(a, a) = -out;
    }
    return g;
}

GeneratorMatrix aggregated_generator(const ChannelModel& model, double y) {
    const int l = model.n_classes();
    GeneratorMatrix g;
    g.voltage = y;
    g.states.resize(l);
    for (int j = 0; j < l; ++j) g.states[j] = j;
    g.Q.setZero(l, l);
    for (int j = 0; j < l; ++j) {
        double out = 0.0;
        for (int k = 0; k < l; ++k) {
            if (j == k) continue;
            const double v = averaged_rate(model, y, j, k);
            g.Q(j, k) = v;
            out += v;
        }
        g.Q(j, j) = -out;
    }
    return g;
}

QuasiStationary quasi_stationary(const GeneratorMatrix& gen) {
    const int n = static_cast<int>(gen.Q.rows());
    QuasiStationary out;
    if (n == 1) {
        out.p = Eigen::VectorXd::Ones(1);
        out.residual = 0.0;
        return out;
    }

    // weak irreducibility: null space of Q^T must be one-dimensional
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gen.Q.transpose());
    lu.setThreshold(1e-10);
    if (lu.rank() != n - 1)
        throw InvariantError("generator is not weakly irreducible (null space dim != 1)");

    // replace the last balance equation (redundant: rows of Q^T sum to zero)
    // by the normalization row; the square system is nonsingular
    Eigen::MatrixXd A = gen.Q.transpose();
    A.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[n - 1] = 1.0;
    Eigen::VectorXd p = A.partialPivLu().solve(rhs);

    for (int i = 0; i < n; ++i) {
        if (p[i] < 0.0) {
            if (p[i] < -1e-12) throw InvariantError("quasi-stationary solve produced mass < 0");
            p[i] = 0.0;
        }
    }
    p /= p.sum();
    out.p = std::move(p);
    out.residual = (out.p.transpose() * gen.Q).cwiseAbs().maxCoeff();
    if (out.residual > 1e-12)
        throw InvariantError("quasi-stationary residual exceeds 1e-12");
    return out;
}

double averaged_rate(const ChannelModel& model, double y, int j, int k) {
    if (j == k) throw ConfigError("averaged_rate needs j != k");
    const QuasiStationary mu = quasi_stationary(generator_matrix(model, y, j));
    const auto& from = model.states_in_class(j);
    const auto& to = model.states_in_class(k);
    double acc = 0.0;
    for (std::size_t a = 0; a < from.size(); ++a) {
        double row = 0.0;
        for (int t : to) row += model.rate_value(from[a], t, y);
        acc += mu.p[a] * row;
    }
    return acc;
}

}  // namespace pdmp
