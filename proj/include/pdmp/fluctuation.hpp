#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pdmp/geometry.hpp"
#include "pdmp/kinetics.hpp"

namespace pdmp {

// Per-channel Poisson-equation data at frozen voltage y: centered observable
// d(xi) = c_xi (v_xi - y) - mu-average over the active class, its solution phi
// with B phi = -d, mu phi = 0, and the Green-Kubo variance s = sum mu d phi.
struct ChannelPoisson {
    Eigen::VectorXd mu;
    Eigen::VectorXd d;
    Eigen::VectorXd phi;
    double s = 0.0;
};

// First representation: phi = -(mu^T mu + B^T B)^{-1} B^T d, the unique
// solution of B phi = -d with mu phi = 0. d is centered against mu first.
Eigen::VectorXd solve_phi_linear(const GeneratorMatrix& gen, const Eigen::VectorXd& d,
                                 const QuasiStationary& mu);

struct IntegralPolicy {
    bool quadrature = false;  // false: eigendecomposition path
    double gap_tol = 1e-10;   // smallest admissible spectral gap
    double tail_tol = 1e-13;  // quadrature path stopping threshold
};

// Second representation: phi = int_0^infty e^{B s} d ds, evaluated on the
// complement of the null space (components -c_m/lambda_m), or by panelwise
// quadrature with e^{Bh} propagators as a fallback.
Eigen::VectorXd solve_phi_integral(const GeneratorMatrix& gen, const Eigen::VectorXd& d,
                                   const IntegralPolicy& policy = {});

// s = sum_xi mu(xi) d(xi) phi(xi) >= 0; values in [-1e-12, 0) are clipped to
// 0, anything more negative is an internal-consistency error
double channel_variance(const Eigen::VectorXd& mu, const Eigen::VectorXd& d,
                        const Eigen::VectorXd& phi);

// assembles d, phi, s for one channel residing in class `cls` at voltage y
ChannelPoisson solve_channel(const ChannelModel& model, int cls, double y);

// Diffusion operator on the truncated modes. `a` is the noise-convention
// matrix (a = 2 C_paper, so that the SDE generator is the standard
// (1/2) Tr d^2 psi a); all paper-formula comparisons use paper() = a/2.
struct DiffusionOperator {
    Eigen::MatrixXd a;
    Eigen::MatrixXd factor;  // K x N, factor factor^T = a exactly
    Eigen::VectorXd s;       // per-channel variances

    Eigen::MatrixXd paper() const { return 0.5 * a; }
};

// a = 2 sum_i w_i^2 s_i(u) W_i W_i^T with W_i the pairing column of channel i;
// runs the PSD check (eigenvalues >= -1e-12; [-1e-12,0) clipped)
DiffusionOperator diffusion_matrix(const Eigen::VectorXd& coeffs,
                                   const std::vector<int>& classes, const ChannelModel& model,
                                   const SourceGeometry& geom);

// hot-path variant: only the K x N factor (column i = sqrt(2 s_i) w_i W_i),
// no dense assembly, no eigen check; workspace reused across calls
class DiffusionFactor {
  public:
    DiffusionFactor(const ChannelModel& model, const SourceGeometry& geom);

    // refresh for the current field/classes; voltages = W^T coeffs
    const Eigen::MatrixXd& refresh(const Eigen::VectorXd& voltages,
                                   const std::vector<int>& classes);

    const Eigen::VectorXd& channel_variances() const { return s_; }

  private:
    const ChannelModel& model_;
    const SourceGeometry& geom_;
    Eigen::MatrixXd M_;
    Eigen::VectorXd s_;
};

// the K x N factor of a DiffusionOperator
inline const Eigen::MatrixXd& noise_factor(const DiffusionOperator& op) { return op.factor; }

// PSD repair: eigenvalues in [-1e-12, 0) clipped to 0, more negative -> error
Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& a, double tol = 1e-12);

struct TraceResult {
    double value = 0.0;
    double tail_bound = 0.0;
};

// Tr Q_t = sum_k int_0^t e^{-2 nu lambda_k (t-s)} C_kk(u_s) ds for diagonal
// samples C_kk(u_{s_j}) on the grid `times` (paper convention). The kernel is
// integrated exactly against the piecewise-linear interpolant of C_kk
// (product trapezoid); plain trapezoid cannot resolve the 1/lambda_k kernel
// timescale on any reasonable grid. Tail over k > K uses
// sup_k C_kk <= sup_s sum_i w_i^2 s_i(u_s) b_i^2 with b_i the per-channel
// source sup bound, times sum_{k>K} 1/(2 nu (k pi)^2) (default family only).
TraceResult trace_Q(const Eigen::VectorXd& times, const std::vector<Eigen::VectorXd>& diag,
                    double t, double nu, const SpectralBasis& basis,
                    double sup_diag_bound = 0.0);

// diagonal C_kk(u) in the paper convention for one field sample
Eigen::VectorXd trace_diag(const Eigen::VectorXd& coeffs, const std::vector<int>& classes,
                           const ChannelModel& model, const SourceGeometry& geom);

// constants (alpha, beta, gamma) of the mollified trace bound
// Tr Q_t <= sum_k int_0^t (alpha ||u||^2 + beta ||u|| + gamma) e^{-2 nu lambda_k (t-s)} ds,
// assembled from model bounds over the operating voltage range
struct TraceBoundConstants {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

TraceBoundConstants mollified_trace_constants(const ChannelModel& model,
                                              const SourceGeometry& geom, double y_lo = -120.0,
                                              double y_hi = 60.0, double step = 0.5);

}  // namespace pdmp
