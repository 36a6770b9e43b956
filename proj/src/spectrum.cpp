#include <vstate/spectrum.hpp>

#include <cmath>
#include <string>

#include <vstate/linop.hpp>

namespace vstate {

namespace {

void require_fold(int m)
{
    if (m < 3)
        throw std::invalid_argument("fold index must be >= 3, got " + std::to_string(m));
}

}  // namespace

double dispersion_value(int m, double q)
{
    return 1.0 + std::pow(q, m) - 0.5 * (1.0 - q * q) * m;
}

double dispersion_slope(int m, double q)
{
    return m * std::pow(q, m - 1) + m * q;
}

BifurcationPoint find_qm(int m)
{
    require_fold(m);
    // f_m(0) = 1 - m/2 < 0 < 2 = f_m(1) and f_m is increasing on (0,1).
    double lo = 0.0;
    double hi = 1.0;
    for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (dispersion_value(m, mid) < 0.0 ? lo : hi) = mid;
    }
    double q = 0.5 * (lo + hi);
    for (int k = 0; k < 5; ++k) {
        const double step = dispersion_value(m, q) / dispersion_slope(m, q);
        if (!std::isfinite(step))
            break;
        q -= step;
    }
    return {m, q, std::abs(dispersion_value(m, q))};
}

PerturbationCoeffs kernel_vector(int m, double q, int modes)
{
    require_fold(m);
    if (m + 1 > modes + 1)
        throw std::invalid_argument("kernel direction w^" + std::to_string(m + 1) +
                                    " not representable with " + std::to_string(modes) +
                                    " modes");
    PerturbationCoeffs v(modes);
    double c = 1.0;
    for (int p = m + 1; p <= modes + 1; p += 2, c *= q)
        v.set(p, c);
    return v;
}

double kernel_tail_bound(int m, double q, int modes)
{
    return std::pow(q, 0.5 * (modes - m)) * std::abs(mode_eigenvalue(modes, q));
}

PerturbationCoeffs range_solve(int m, double q, const std::vector<double>& g, double range_tol)
{
    require_fold(m);
    const int n_modes = static_cast<int>(g.size());
    if (n_modes < m)
        throw std::invalid_argument("range vector shorter than the fold index");
    if (std::abs(g[static_cast<size_t>(m - 1)]) > range_tol)
        throw NotInRange("component g_" + std::to_string(m) + " = " +
                         std::to_string(g[static_cast<size_t>(m - 1)]) +
                         " along the cokernel; not in the range");

    // Row n reads sigma lambda_n (a_{n+1} - Q a_{n-1}) = g_n; row m is vacuous
    // and a_{m+1} is the free coordinate, fixed to zero.
    PerturbationCoeffs a(n_modes);
    for (int n = 1; n <= n_modes; ++n) {
        if (n == m)
            continue;
        const double lam = kClosedFormSign * mode_eigenvalue(n, q);
        a.set(n + 1, q * a[n - 1] + g[static_cast<size_t>(n - 1)] / lam);
    }
    return a;
}

double transversality(int m, double q)
{
    return -m * (q + std::pow(q, m - 1));
}

double asymptotic_alpha()
{
    double lo = 1.0;  // 1 + e^{-1} - 1 > 0
    double hi = 2.0;  // 1 + e^{-2} - 2 < 0
    for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        (1.0 + std::exp(-mid) - mid > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace vstate
