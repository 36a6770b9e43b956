#include <vstate/functional.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include <vstate/fourier.hpp>

namespace vstate {

double ResidualSpectrum::sup_norm() const noexcept
{
    double s = 0.0;
    for (double v : g)
        s = std::max(s, std::abs(v));
    return s;
}

int default_grid_size(int modes)
{
    const auto want = static_cast<unsigned>(std::max(64, 4 * modes));
    return static_cast<int>(std::bit_ceil(want));
}

GridSamples eval_G(RotationSpeed omega, const BoundaryMap& b, const Grid& targets,
                   const QuadratureRule& rule, GuardPolicy guard)
{
    const GridSamples g2 = cauchy_pair_integral(b, targets, rule, DiagonalMode::kStaggered, guard);
    const GridSamples phi = eval_map(b, targets);
    const GridSamples dphi = eval_map_derivative(b, targets);
    const double two_omega = 2.0 * omega.value();

    GridSamples out{targets, std::vector<cplx>(g2.values.size())};
    for (int i = 0; i < targets.size(); ++i) {
        const auto u = static_cast<size_t>(i);
        out.values[u] = (two_omega * std::conj(phi.values[u]) + g2.values[u]) * targets.node(i) *
                        dphi.values[u];
    }
    return out;
}

GridSamples eval_G(RotationSpeed omega, const BoundaryMap& b, int grid, GuardPolicy guard)
{
    return eval_G(omega, b, Grid::staggered(grid), QuadratureRule(grid), guard);
}

ResidualSpectrum eval_F(const EllipseParam& q, const PerturbationCoeffs& f,
                        const FunctionalOptions& opts)
{
    const int n = f.modes();
    if (n < 1)
        throw std::invalid_argument("eval_F needs at least one mode");
    const int m = opts.grid > 0 ? opts.grid : default_grid_size(n);
    if (m < 4 * n)
        throw std::invalid_argument("grid " + std::to_string(m) + " below 4N = " +
                                    std::to_string(4 * n));

    const BoundaryMap b(q, f);
    if (opts.guard == GuardPolicy::kEnforce) {
        const CoercivityReport rep = coercivity_guard(b, opts.margin);
        if (!rep.ok)
            throw GuardViolation("coercivity guard failed (ratio " + std::to_string(rep.ratio) +
                                 ")");
    }
    const GridSamples g = eval_G(RotationSpeed::kirchhoff(q), b, Grid::staggered(m),
                                 QuadratureRule(m), GuardPolicy::kReport);

    std::vector<double> im(g.values.size());
    std::transform(g.values.begin(), g.values.end(), im.begin(),
                   [](cplx z) { return z.imag(); });
    const SineAnalysis sa = sine_analysis(g.grid, im, n);

    ResidualSpectrum out;
    out.g = sa.sine;
    out.tail_norm = sa.tail_norm;
    out.cosine_energy = sa.cosine_energy;
    for (double v : im)
        out.sup_abs = std::max(out.sup_abs, std::abs(v));
    if (!(out.cosine_energy < opts.cosine_tol))
        throw SymmetryLeak("cosine energy " + std::to_string(out.cosine_energy) +
                           " in F: image is not odd in theta");
    return out;
}

}  // namespace vstate
