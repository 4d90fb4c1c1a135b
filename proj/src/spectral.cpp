#include "pdmp/spectral.hpp"

#include <cmath>

#include "pdmp/quadrature.hpp"

namespace pdmp {

namespace {

double bump_raw(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - x * x));
}

// int_{-1}^{1} M(x) dx, computed once
double bump_integral() {
    static const double value = integrate_adaptive(bump_raw, -1.0, 1.0, 1e-14);
    return value;
}

}  // namespace

std::shared_ptr<const SpectralBasis> SpectralBasis::dirichlet_sine(int mode_count) {
    if (mode_count < 1) throw ConfigError("mode_count must be >= 1");
    Eigen::VectorXd lambda(mode_count);
    for (int k = 1; k <= mode_count; ++k) lambda[k - 1] = (k * M_PI) * (k * M_PI);
    auto eval = [](int k, double x) { return M_SQRT2 * std::sin(k * M_PI * x); };
    return std::make_shared<SpectralBasis>(std::move(lambda), eval, true);
}

SpectralBasis::SpectralBasis(Eigen::VectorXd eigenvalues, Evaluator l2_evaluator, bool sine)
    : lambda_(std::move(eigenvalues)), eval_(std::move(l2_evaluator)), sine_(sine) {
    if (lambda_.size() == 0) throw ConfigError("empty eigenvalue list");
    if (!(lambda_[0] > 0)) throw ConfigError("eigenvalues must be positive");
    for (int i = 1; i < lambda_.size(); ++i)
        if (!(lambda_[i] > lambda_[i - 1]))
            throw ConfigError("eigenvalues must be strictly increasing");
    if (!eval_) throw ConfigError("missing eigenfunction evaluator");
}

double SpectralBasis::evaluate(int k, double x, BasisKind kind) const {
    const int idx = check_mode(k);
    const double f = eval_(k, x);
    return kind == BasisKind::L2 ? f : f / std::sqrt(1.0 + lambda_[idx]);
}

Eigen::VectorXd SpectralBasis::evaluate_all(double x, BasisKind kind) const {
    Eigen::VectorXd v(mode_count());
    for (int k = 1; k <= mode_count(); ++k) v[k - 1] = evaluate(k, x, kind);
    return v;
}

SpectralField::SpectralField(std::shared_ptr<const SpectralBasis> basis, Eigen::VectorXd coeffs,
                             BasisKind kind)
    : basis_(std::move(basis)), c_(std::move(coeffs)), kind_(kind) {
    if (!basis_) throw ConfigError("field needs a basis");
    if (c_.size() != basis_->mode_count()) throw ConfigError("coefficient/basis size mismatch");
}

double SpectralField::operator()(double x) const {
    if (x < 0.0 || x > 1.0) throw std::domain_error("eval_field: x outside [0,1]");
    double acc = 0.0;
    for (int k = 1; k <= basis_->mode_count(); ++k)
        acc += c_[k - 1] * basis_->evaluate(k, x, kind_);
    return acc;
}

double SpectralField::l2_norm() const {
    if (kind_ == BasisKind::L2) return c_.norm();
    double acc = 0.0;
    for (int k = 0; k < c_.size(); ++k)
        acc += c_[k] * c_[k] / (1.0 + basis_->eigenvalues()[k]);
    return std::sqrt(acc);
}

double SpectralField::h_norm() const {
    if (kind_ == BasisKind::H) return c_.norm();
    double acc = 0.0;
    for (int k = 0; k < c_.size(); ++k)
        acc += (1.0 + basis_->eigenvalues()[k]) * c_[k] * c_[k];
    return std::sqrt(acc);
}

SpectralField SpectralField::semigroup(double t) const {
    if (t < 0.0) throw std::domain_error("semigroup: t must be >= 0");
    Eigen::VectorXd out = c_;
    for (int k = 0; k < out.size(); ++k) out[k] *= std::exp(-basis_->eigenvalues()[k] * t);
    return SpectralField(basis_, std::move(out), kind_);
}

SpectralField SpectralField::to_kind(BasisKind kind) const {
    if (kind == kind_) return *this;
    Eigen::VectorXd out = c_;
    for (int k = 1; k <= basis_->mode_count(); ++k) {
        const double s = basis_->h_factor(k);
        // a_k f_k = (a_k sqrt(1+lambda_k)) e_k
        out[k - 1] *= (kind == BasisKind::H) ? s : 1.0 / s;
    }
    return SpectralField(basis_, std::move(out), kind);
}

DiracPairing dirac_pairing(const SpectralBasis& basis, double x, int k, BasisKind convention) {
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("dirac_pairing: x outside (0,1)");
    const double f = basis.evaluate(k, x, BasisKind::L2);
    if (convention == BasisKind::L2) return {f, convention};
    // <delta_x, e_k> = (1+lambda_k) e_k(x)
    const double lam = basis.eigenvalue(k);
    return {(1.0 + lam) * f / std::sqrt(1.0 + lam), convention};
}

Mollifier::Mollifier(double center, double width, const SpectralBasis& basis)
    : z_(center), kappa_(width) {
    if (!(kappa_ > 0.0)) throw ConfigError("mollifier width must be positive");
    if (!(z_ - kappa_ > 0.0 && z_ + kappa_ < 1.0))
        throw ConfigError("mollifier support [z-kappa, z+kappa] must lie inside (0,1)");
    mass_ = integrate_adaptive([&](double x) { return (*this)(x); }, z_ - kappa_, z_ + kappa_,
                               1e-12);
    const int K = basis.mode_count();
    pairings_.resize(K);
    hfac_.resize(K);
    for (int k = 1; k <= K; ++k) {
        pairings_[k - 1] = integrate_adaptive(
            [&](double x) { return (*this)(x)*basis.evaluate(k, x, BasisKind::L2); },
            z_ - kappa_, z_ + kappa_, 1e-12);
        hfac_[k - 1] = std::sqrt(1.0 + basis.eigenvalue(k));
    }
}

double Mollifier::operator()(double x) const {
    return bump_raw((x - z_) / kappa_) / (kappa_ * bump_integral());
}

double Mollifier::pairing(int k, BasisKind kind) const {
    if (k < 1 || k > pairings_.size()) throw ConfigError("mode index out of range");
    const double p = pairings_[k - 1];
    return kind == BasisKind::L2 ? p : p / hfac_[k - 1];
}

}  // namespace pdmp
