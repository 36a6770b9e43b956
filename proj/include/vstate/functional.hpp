#pragma once

// Steady-rotation functional of a vortex patch boundary
//
//   G(Omega, Phi)(w) = (2 Omega conj Phi(w) + G2(w)) w Phi'(w),
//
// and its imaginary part F(Q, f) = Im G((1-Q^2)/4, w + Q/w + f) expanded in
// e_n = Im(w^n). The patch is a V-state rotating at Omega iff Im G = 0 on |w| = 1.

#include <stdexcept>
#include <vector>

#include <vstate/boundary.hpp>
#include <vstate/quadrature.hpp>

namespace vstate {

class RotationSpeed {
public:
    explicit RotationSpeed(double omega) : omega_(omega) {}

    /// Kirchhoff speed (1-Q^2)/4 of the ellipse with parameter Q.
    static RotationSpeed kirchhoff(const EllipseParam& q) { return RotationSpeed(q.kirchhoff_omega()); }

    double value() const noexcept { return omega_; }

    /// 0 < Omega < 1/2; values outside are legal but unphysical.
    bool physical() const noexcept { return omega_ > 0.0 && omega_ < 0.5; }

private:
    double omega_;
};

/// Raised when Im G has a cosine component, i.e. the image left the odd
/// sector. Real coefficients make that impossible, so it flags a bug.
class SymmetryLeak : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ResidualSpectrum {
    std::vector<double> g;       // coefficient of Im(w^n), n = 1 .. N
    double tail_norm = 0.0;      // modes beyond N on the analysis grid
    double cosine_energy = 0.0;
    double sup_abs = 0.0;        // max |Im G| over the target samples

    double sup_norm() const noexcept;
};

struct FunctionalOptions {
    int grid = 0;  // 0: smallest power of two >= 4N (at least 64)
    GuardPolicy guard = GuardPolicy::kEnforce;
    double margin = kDefaultCoercivityMargin;
    double cosine_tol = 1e-10;
};

/// Grid size used when FunctionalOptions::grid is 0.
int default_grid_size(int modes);

/// G(Omega, Phi) at the targets, with `rule` nodes for the contour integral.
GridSamples eval_G(RotationSpeed omega, const BoundaryMap& b, const Grid& targets,
                   const QuadratureRule& rule, GuardPolicy guard = GuardPolicy::kEnforce);

/// Shorthand: M nodes, M staggered targets.
GridSamples eval_G(RotationSpeed omega, const BoundaryMap& b, int grid,
                   GuardPolicy guard = GuardPolicy::kEnforce);

/// Sine coefficients g_1..g_N of F(Q, f) with N = f.modes().
ResidualSpectrum eval_F(const EllipseParam& q, const PerturbationCoeffs& f,
                        const FunctionalOptions& opts = {});

}  // namespace vstate
