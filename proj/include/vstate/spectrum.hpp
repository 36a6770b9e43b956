#pragma once

// Bifurcation points of the ellipse family and the linear algebra around them.
//
// The two-band operator at f = 0 degenerates exactly when
//   f_m(Q) = 1 + Q^m - (1-Q^2) m / 2 = 0   (= -lambda_m(Q)),
// which has a unique root Q_m in (0,1) for each m >= 3. Its kernel is spanned
// by w^{m+1} / (1 - Q w^2).

#include <stdexcept>
#include <vector>

#include <vstate/boundary.hpp>

namespace vstate {

struct BifurcationPoint {
    int m = 0;
    double q = 0.0;
    double residual = 0.0;  // |f_m(Q_m)|

    /// Aspect ratio a/b = (1+Q)/(1-Q) of the ellipse at the bifurcation.
    double aspect_ratio() const noexcept { return (1.0 + q) / (1.0 - q); }
};

/// A right-hand side with a nonzero component along the cokernel direction.
class NotInRange : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double dispersion_value(int m, double q);
double dispersion_slope(int m, double q);

/// 60 bisection steps on (0,1), then 5 Newton steps.
BifurcationPoint find_qm(int m);

/// a_{m+1+2k} = Q^k truncated to powers <= N+1.
PerturbationCoeffs kernel_vector(int m, double q, int modes);

/// Q^{(N-m)/2} |lambda_N(Q)|: size of what truncating the kernel series neglects.
double kernel_tail_bound(int m, double q, int modes);

/// Pre-image under closed_form_lq normalized by a_{m+1} = 0.
/// g holds g_1..g_N; throws NotInRange if |g_m| > range_tol.
PerturbationCoeffs range_solve(int m, double q, const std::vector<double>& g,
                               double range_tol = 1e-12);

/// -m (Q + Q^{m-1}): Q-derivative of the degenerate eigenvalue along v_m.
double transversality(int m, double q);

/// Root of 1 + e^{-a} - a = 0; governs Q_m = 1 - alpha/m + o(1/m).
double asymptotic_alpha();

}  // namespace vstate
