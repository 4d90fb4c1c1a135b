#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "pdmp/errors.hpp"

namespace pdmp {

// Two normalizations of the same eigenbasis on I = [0,1]:
//   L2: f_k(x) = sqrt(2) sin(k pi x),             ||f_k||_{L2} = 1
//   H:  e_k(x) = f_k(x)/sqrt(1+lambda_k),         ||e_k||_H   = 1
// Coefficient conversion: u = sum a_k f_k = sum b_k e_k with b_k = a_k sqrt(1+lambda_k).
enum class BasisKind { L2, H };

// Eigenbasis of -Delta with Dirichlet conditions (default lambda_k = (k pi)^2),
// or of any declared diagonal operator via the generic constructor. Mode
// indices are 1-based throughout the public API, matching lambda_k = (k pi)^2.
class SpectralBasis {
  public:
    using Evaluator = std::function<double(int k, double x)>;  // L2-normalized

    static std::shared_ptr<const SpectralBasis> dirichlet_sine(int mode_count);

    // generic-operator hook: arbitrary increasing positive eigenvalues and a
    // bounded L2-normalized eigenfunction evaluator
    SpectralBasis(Eigen::VectorXd eigenvalues, Evaluator l2_evaluator, bool sine = false);

    int mode_count() const { return static_cast<int>(lambda_.size()); }
    double eigenvalue(int k) const { return lambda_[check_mode(k)]; }
    const Eigen::VectorXd& eigenvalues() const { return lambda_; }
    bool is_sine() const { return sine_; }

    // basis function value; e_k = f_k / sqrt(1+lambda_k)
    double evaluate(int k, double x, BasisKind kind = BasisKind::L2) const;

    // all K basis values at x as a vector
    Eigen::VectorXd evaluate_all(double x, BasisKind kind = BasisKind::L2) const;

    // sqrt(1+lambda_k), the f <-> e conversion factor
    double h_factor(int k) const { return std::sqrt(1.0 + lambda_[check_mode(k)]); }

  private:
    int check_mode(int k) const {
        if (k < 1 || k > mode_count()) throw ConfigError("mode index out of range");
        return k - 1;
    }

    Eigen::VectorXd lambda_;
    Evaluator eval_;
    bool sine_;
};

class SpectralField {
  public:
    SpectralField(std::shared_ptr<const SpectralBasis> basis, Eigen::VectorXd coeffs,
                  BasisKind kind = BasisKind::L2);

    const Eigen::VectorXd& coeffs() const { return c_; }
    BasisKind kind() const { return kind_; }
    const std::shared_ptr<const SpectralBasis>& basis() const { return basis_; }

    double operator()(double x) const;  // x in [0,1]

    double l2_norm() const;
    double h_norm() const;

    // heat semigroup e^{Delta t}: mode k scaled by exp(-lambda_k t)
    SpectralField semigroup(double t) const;

    SpectralField to_kind(BasisKind kind) const;

  private:
    std::shared_ptr<const SpectralBasis> basis_;
    Eigen::VectorXd c_;
    BasisKind kind_;
};

// <delta_x, e_k> = (1+lambda_k) e_k(x) in the H-dual convention, f_k(x) in the
// L2 convention; the convention is returned with the value so callers cannot
// mix them silently.
struct DiracPairing {
    double value;
    BasisKind convention;
};

DiracPairing dirac_pairing(const SpectralBasis& basis, double x, int k,
                           BasisKind convention = BasisKind::L2);

// Unit-mass bump at z with support [z-kappa, z+kappa] strictly inside (0,1):
//   phi_z(x) = M((x-z)/kappa) / (kappa int M),  M(x) = exp(-1/(1-x^2)) 1_{[-1,1]}.
// The raw bump of the source model integrates to int M ~ 0.444; pairings here
// use the unit-mass normalization so that (phi_z, f_k) -> f_k(z) as kappa -> 0
// (phi_z stands in for the Dirac source delta_z).
class Mollifier {
  public:
    Mollifier(double center, double width, const SpectralBasis& basis);

    double center() const { return z_; }
    double width() const { return kappa_; }

    double operator()(double x) const;  // normalized bump value

    // integral of the bump over its support (== 1 up to quadrature tolerance)
    double mass() const { return mass_; }

    // precomputed (phi_z, f_k)_{L2} for k = 1..K; H convention divides by
    // sqrt(1+lambda_k)
    const Eigen::VectorXd& pairings() const { return pairings_; }
    double pairing(int k, BasisKind kind = BasisKind::L2) const;

  private:
    double z_;
    double kappa_;
    double mass_;
    Eigen::VectorXd pairings_;
    Eigen::VectorXd hfac_;
};

}  // namespace pdmp
