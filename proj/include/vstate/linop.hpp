#pragma once

// Linearizations of F(Q, f) acting on perturbation coefficients.
//
// Matrices map X-coordinates (a_2 .. a_{N+1}) to Y-coordinates (g_1 .. g_N):
// entry (r, c) is the coefficient of Im(w^{r+1}) produced by the direction
// w^{c+2}. At f = 0 the operator is the two-band matrix
//
//   g_n = sigma * lambda_n(Q) (a_{n+1} - Q a_{n-1}),
//   lambda_n(Q) = (1-Q^2) n / 2 - 1 - Q^n,
//
// with global sign sigma = kClosedFormSign.

#include <vector>

#include <Eigen/Dense>

#include <vstate/boundary.hpp>
#include <vstate/quadrature.hpp>

namespace vstate {

/// Orientation of the closed-form operator relative to the textbook
/// expression sigma = +1. Fixed by comparing against finite differences of
/// eval_F (tests/test_linop.cpp re-checks it on every run).
inline constexpr double kClosedFormSign = -1.0;

struct LinearOperatorMatrix {
    Eigen::MatrixXd entries;  // N x N
    double q = 0.0;
    double f_norm = 0.0;      // sup |a_n| of the base point

    int modes() const noexcept { return static_cast<int>(entries.rows()); }

    /// Entry coupling direction w^power to Im(w^row).
    double at(int row, int power) const { return entries(row - 1, power - 2); }

    Eigen::VectorXd apply(const PerturbationCoeffs& h) const;
};

/// lambda_n(Q) and its Q-derivative.
double mode_eigenvalue(int n, double q) noexcept;
double mode_eigenvalue_dq(int n, double q) noexcept;

LinearOperatorMatrix closed_form_lq(const EllipseParam& q, int modes);

/// Entrywise d/dQ of closed_form_lq.
LinearOperatorMatrix dq_of_lq_closed(const EllipseParam& q, int modes);

struct JacobianOptions {
    int grid = 0;  // 0: default_grid_size(N)
    GuardPolicy guard = GuardPolicy::kEnforce;
    double margin = kDefaultCoercivityMargin;
};

/// d_f F(Q, f) from the integral representation of d_f G2 = I1 + I2 + I3.
LinearOperatorMatrix assemble_jacobian(const EllipseParam& q, const PerturbationCoeffs& f,
                                       const JacobianOptions& opts = {});

/// d_Q d_f F(Q, f), including the chain term of the slaved Omega(Q).
LinearOperatorMatrix dq_jacobian_integral(const EllipseParam& q, const PerturbationCoeffs& f,
                                          const JacobianOptions& opts = {});

/// d_Q F(Q, f) at fixed f (Omega slaved), g_1 .. g_N.
std::vector<double> dq_residual(const EllipseParam& q, const PerturbationCoeffs& f,
                                const JacobianOptions& opts = {});

/// Everything one Newton step needs from a single pass over the kernels.
struct Linearization {
    std::vector<double> residual;     // F(Q, f)
    LinearOperatorMatrix jacobian;    // d_f F
    std::vector<double> dq_residual;  // d_Q F
    double tail_norm = 0.0;           // of F beyond mode N
};

Linearization linearize(const EllipseParam& q, const PerturbationCoeffs& f,
                        const JacobianOptions& opts = {});

}  // namespace vstate
