#pragma once

// Boundary parametrizations of vortex patches as perturbed ellipse maps
//
//   Phi(w) = s * (w + Q/w + sum_{n=2}^{N+1} a_n w^n),   |w| = 1,
//
// with real a_n. The dilation s is 1 for every map the solver produces; it
// exists so that scaling properties of the contour functional can be tested.

#include <complex>
#include <span>
#include <vector>

namespace vstate {

using cplx = std::complex<double>;

inline constexpr double kDefaultCoercivityMargin = 0.05;

/// Aspect parameter Q = (a-b)/(a+b) of an ellipse with semi-axes a >= b.
class EllipseParam {
public:
    explicit EllipseParam(double q);

    double value() const noexcept { return q_; }

    /// Kirchhoff angular velocity ab/(a+b)^2 = (1-Q^2)/4.
    double kirchhoff_omega() const noexcept { return 0.25 * (1.0 - q_ * q_); }

private:
    double q_;
};

/// Real coefficients of f(w) = sum a_n w^n for n = 2 .. N+1.
class PerturbationCoeffs {
public:
    PerturbationCoeffs() = default;
    explicit PerturbationCoeffs(int modes);
    explicit PerturbationCoeffs(std::vector<double> from_power_two);

    int modes() const noexcept { return static_cast<int>(a_.size()); }
    int max_power() const noexcept { return modes() + 1; }

    /// Coefficient of w^n; zero for powers outside 2..N+1.
    double operator[](int n) const noexcept
    {
        return (n >= 2 && n <= max_power()) ? a_[static_cast<size_t>(n - 2)] : 0.0;
    }
    void set(int n, double value);

    std::span<const double> values() const noexcept { return a_; }
    std::span<double> values() noexcept { return a_; }

    /// Copy with a different mode count (zero padded or truncated).
    PerturbationCoeffs resized(int modes) const;

    double sup_norm() const noexcept;
    bool is_zero() const noexcept;

private:
    std::vector<double> a_;
};

class BoundaryMap {
public:
    BoundaryMap(EllipseParam ellipse, PerturbationCoeffs pert);

    /// Same boundary dilated by s > 0. Only used to probe scaling laws.
    static BoundaryMap dilated(const BoundaryMap& base, double s);

    const EllipseParam& ellipse() const noexcept { return ellipse_; }
    const PerturbationCoeffs& pert() const noexcept { return pert_; }
    double q() const noexcept { return ellipse_.value(); }
    double scale() const noexcept { return scale_; }
    int modes() const noexcept { return pert_.modes(); }

    cplx value(cplx w) const;
    cplx derivative(cplx w) const;

    /// f(w) and f'(w) of the perturbation alone (no dilation).
    cplx perturbation(cplx w) const;
    cplx perturbation_derivative(cplx w) const;

private:
    EllipseParam ellipse_;
    PerturbationCoeffs pert_;
    double scale_ = 1.0;
};

/// Uniform grid on the unit circle: w_j = exp(2 pi i j / M), or
/// exp(2 pi i (j + 1/2) / M) when offset.
class Grid {
public:
    Grid(int size, bool offset);

    static Grid integer(int size) { return Grid(size, false); }
    static Grid staggered(int size) { return Grid(size, true); }

    int size() const noexcept { return size_; }
    bool offset() const noexcept { return offset_; }
    double angle(int j) const noexcept;
    cplx node(int j) const noexcept;

    bool operator==(const Grid&) const = default;

private:
    int size_;
    bool offset_;
};

bool is_power_of_two(int n) noexcept;

struct GridSamples {
    Grid grid;
    std::vector<cplx> values;
};

/// Phi(w_j) on the grid. Rejects grids with M < 2(N+1).
GridSamples eval_map(const BoundaryMap& b, const Grid& grid);

/// Phi'(w_j) = 1 - Q/w_j^2 + sum n a_n w_j^{n-1} (times the dilation).
GridSamples eval_map_derivative(const BoundaryMap& b, const Grid& grid);

/// Phi(conj w_j). For real coefficients this is conj(Phi(w_j)) bit for bit.
GridSamples conjugate_samples(const BoundaryMap& b, const Grid& grid);

struct CoercivityReport {
    bool ok = true;
    double sup_fprime = 0.0;  // max |f'| on the oversampled grid
    double bound = 0.0;       // (1-Q)/2 * (1 - margin)
    double ratio = 0.0;       // sup_fprime / ((1-Q)/2)
};

/// Checks sup |f'| <= (1-Q)/2 (1 - margin), which makes Phi bi-Lipschitz
/// with constant (1-Q)/2. Sampled on a grid 4x finer than the coefficients.
CoercivityReport coercivity_guard(const BoundaryMap& b,
                                  double margin = kDefaultCoercivityMargin);

/// Copy of `a` scaled so that sum n |a_n| (an upper bound for sup |f'|)
/// equals `bound`. Zero input stays zero.
PerturbationCoeffs scaled_to_fprime_bound(const PerturbationCoeffs& a, double bound);

/// min over grid pairs of |Phi(xi) - Phi(w)| / |xi - w| (|Phi'| on the
/// diagonal). A direct measurement of the chord-arc constant of the curve.
double chord_arc_constant(const BoundaryMap& b, int grid_size);

}  // namespace vstate
