#pragma once

// Branches of V-states bifurcating from the ellipse at Q_m.
//
// Unknowns are (Q, a_2 .. a_{N+1}) with the amplitude pinned by a_{m+1} = eps.
// Newton works on the desingularized system
//
//   H(Q, x) = F(Q, eps x) / eps,   x_{m+1} = 1,
//
// whose Jacobian [d_f F(Q, eps x) | d_Q F(Q, eps x) / eps] stays invertible as
// eps -> 0: the Q column tends to (d_Q d_f F) v_m, and transversality is
// exactly the statement that it leaves the range of d_f F.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <vstate/boundary.hpp>
#include <vstate/quadrature.hpp>

namespace vstate {

struct BranchPoint {
    double eps = 0.0;
    double q = 0.0;
    PerturbationCoeffs coeffs;
    double residual_inf = 0.0;     // sup |g_n| at convergence
    int newton_iters = 0;
    std::optional<double> verify;  // out-of-sample certificate, once computed
    double tail_norm = 0.0;        // of F beyond mode N
    double guard_ratio = 0.0;      // sup|f'| / ((1-Q)/2)
    int modes = 0;
    int grid = 0;

    double omega() const noexcept { return 0.25 * (1.0 - q * q); }
    BoundaryMap map() const { return BoundaryMap(EllipseParam(q), coeffs); }
};

struct NewtonOptions {
    int grid = 0;  // 0: default_grid_size(N)
    double tol = 1e-10;
    int max_iters = 25;
    GuardPolicy guard = GuardPolicy::kReport;
    double margin = kDefaultCoercivityMargin;
};

class NewtonFailure : public std::runtime_error {
public:
    NewtonFailure(const std::string& what, double last_residual, int iterations)
        : std::runtime_error(what), last_residual_(last_residual), iterations_(iterations)
    {
    }
    double last_residual() const noexcept { return last_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

struct BranchConfig {
    int m = 3;
    int modes = 128;
    int grid = 512;
    double eps_max = 0.04;
    double eps_step = 0.005;
    double direction = 1.0;  // sign of eps along the branch
    double newton_tol = 1e-10;
    int newton_max_iters = 25;
    int verify_refine = 4;
    double certify_tol = 1e-9;  // verify_vstate threshold per emitted point (10x tol)
    double tail_tol = 1e-8;
    int max_modes = 2048;       // ceiling for automatic N increase
    int max_halvings = 5;
    double continuity_limit = 100.0;
    bool strict_guard = false;  // enforce the coercivity guard inside Newton
    double margin = kDefaultCoercivityMargin;
    bool allow_large_m = false;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

struct BranchResult {
    int m = 0;
    double q_m = 0.0;
    std::vector<BranchPoint> points;
    bool truncated = false;
    std::string diagnostics;
    double continuity_constant = 0.0;  // max |(dQ, da)|_inf / |d eps| between neighbours
    int resolution_changes = 0;
};

/// The ellipse at Q_m with zero perturbation.
BranchPoint initial_point(int m, int modes = 128, int grid = 0);

/// Square bordered matrix of the desingularized system at (eps, Q, x): the
/// columns of d_f F except the pinned one, then the Q column. At eps = 0 the
/// Q column is (d_Q d_f F)(Q, 0) x.
Eigen::MatrixXd bordered_jacobian(int m, double eps, double q, const PerturbationCoeffs& x,
                                  const NewtonOptions& opts = {});

/// Newton correction at fixed amplitude eps from the guess (Q, coeffs). The
/// guess is resized to the guess' mode count; a_{m+1} is set to eps exactly.
BranchPoint newton_correct(int m, double eps, double q_guess, const PerturbationCoeffs& guess,
                           const NewtonOptions& opts = {});

/// sup |Im G| on a grid `refine` times finer, nodes and targets both refined.
double verify_vstate(const BranchPoint& p, int refine);

BranchResult trace_branch(const BranchConfig& cfg);

/// Q(0) by quadratic extrapolation of Newton solutions at eps = h, 2h, 3h.
double extrapolate_bifurcation_q(int m, double h, int modes = 128, int grid = 0,
                                 double direction = 1.0);

}  // namespace vstate
