#pragma once

// Periodic trapezoid discretization of the mean-value contour integral
//
//   mean_T f(tau) dtau = (1 / 2 pi i) int_T f(tau) dtau
//                      ~ (1/M) sum_j f(xi_j) xi_j,   xi_j = exp(2 pi i j / M).
//
// Every kernel handled here extends continuously to the diagonal of T x T.
// The default realization evaluates at targets staggered half a node away from
// the quadrature nodes so no diagonal value is ever needed.

#include <stdexcept>

#include <Eigen/Dense>

#include <vstate/boundary.hpp>

namespace vstate {

class GuardViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// How an operation treats a map outside the coercivity guard.
enum class GuardPolicy {
    kEnforce,  // throw GuardViolation
    kReport,   // evaluate anyway; caller certifies the result independently
};

enum class DiagonalMode {
    kStaggered,  // targets strictly between nodes
    kLimit,      // targets on nodes, diagonal filled with the analytic limit
};

class QuadratureRule {
public:
    explicit QuadratureRule(int nodes);

    int size() const noexcept { return grid_.size(); }
    const Grid& grid() const noexcept { return grid_; }
    cplx node(int j) const noexcept { return grid_.node(j); }

private:
    Grid grid_;
};

using KernelMatrix = Eigen::MatrixXcd;  // rows: targets, cols: quadrature nodes

/// (1/M) sum_j f(xi_j) xi_j for samples on the integer grid.
cplx mean_integral(const GridSamples& f);

/// G2(w) = mean_T (Phi(conj xi) - Phi(conj w)) / (Phi(xi) - Phi(w)) Phi'(xi) dxi.
GridSamples cauchy_pair_integral(const BoundaryMap& b, const Grid& targets,
                                 const QuadratureRule& rule,
                                 DiagonalMode mode = DiagonalMode::kStaggered,
                                 GuardPolicy guard = GuardPolicy::kEnforce);

/// out(w_i) = (1/M) sum_j K(xi_j, w_i) rho(xi_j) xi_j for a bounded kernel
/// sampled at staggered targets. Rejects kernels that jump across the
/// diagonal (Cauchy-type kernels are not bounded).
GridSamples bounded_kernel_integral(const KernelMatrix& kernel, const GridSamples& density,
                                    const Grid& targets);

/// Throws unless targets can be used staggered against `rule`.
void require_staggered(const Grid& targets, const QuadratureRule& rule);

}  // namespace vstate
