#include <vstate/boundary.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vstate {

namespace {

// f(w) = w^2 * sum_{n>=2} a_n w^{n-2}, Horner from the top coefficient.
cplx horner_f(std::span<const double> a, cplx w)
{
    if (a.empty())
        return {0.0, 0.0};
    cplx p{a.back(), 0.0};
    for (size_t k = a.size() - 1; k-- > 0;)
        p = p * w + a[k];
    return p * w * w;
}

// f'(w) = w * sum_{n>=2} n a_n w^{n-2}
cplx horner_fprime(std::span<const double> a, cplx w)
{
    if (a.empty())
        return {0.0, 0.0};
    const size_t top = a.size() - 1;
    cplx p{static_cast<double>(top + 2) * a[top], 0.0};
    for (size_t k = top; k-- > 0;)
        p = p * w + static_cast<double>(k + 2) * a[k];
    return p * w;
}

void check_grid_resolves(const BoundaryMap& b, const Grid& grid)
{
    if (grid.size() < 2 * (b.modes() + 1))
        throw std::invalid_argument("grid of size " + std::to_string(grid.size()) +
                                    " aliases a map with " + std::to_string(b.modes()) +
                                    " modes (need M >= 2(N+1))");
}

}  // namespace

EllipseParam::EllipseParam(double q) : q_(q)
{
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("ellipse parameter Q must lie in (0,1), got " +
                                    std::to_string(q));
}

PerturbationCoeffs::PerturbationCoeffs(int modes)
{
    if (modes < 0)
        throw std::invalid_argument("negative mode count");
    a_.assign(static_cast<size_t>(modes), 0.0);
}

PerturbationCoeffs::PerturbationCoeffs(std::vector<double> from_power_two)
    : a_(std::move(from_power_two))
{
    for (double v : a_)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite perturbation coefficient");
}

void PerturbationCoeffs::set(int n, double value)
{
    if (n < 2 || n > max_power())
        throw std::out_of_range("power " + std::to_string(n) + " outside 2.." +
                                std::to_string(max_power()));
    a_[static_cast<size_t>(n - 2)] = value;
}

PerturbationCoeffs PerturbationCoeffs::resized(int modes) const
{
    std::vector<double> out(static_cast<size_t>(modes), 0.0);
    std::copy_n(a_.begin(), std::min(a_.size(), out.size()), out.begin());
    return PerturbationCoeffs(std::move(out));
}

double PerturbationCoeffs::sup_norm() const noexcept
{
    double s = 0.0;
    for (double v : a_)
        s = std::max(s, std::abs(v));
    return s;
}

bool PerturbationCoeffs::is_zero() const noexcept
{
    return std::all_of(a_.begin(), a_.end(), [](double v) { return v == 0.0; });
}

BoundaryMap::BoundaryMap(EllipseParam ellipse, PerturbationCoeffs pert)
    : ellipse_(ellipse), pert_(std::move(pert))
{
}

BoundaryMap BoundaryMap::dilated(const BoundaryMap& base, double s)
{
    if (!(s > 0.0))
        throw std::invalid_argument("dilation must be positive");
    BoundaryMap out = base;
    out.scale_ = base.scale_ * s;
    return out;
}

cplx BoundaryMap::perturbation(cplx w) const { return horner_f(pert_.values(), w); }

cplx BoundaryMap::perturbation_derivative(cplx w) const
{
    return horner_fprime(pert_.values(), w);
}

cplx BoundaryMap::value(cplx w) const
{
    return scale_ * (w + q() / w + perturbation(w));
}

cplx BoundaryMap::derivative(cplx w) const
{
    return scale_ * (1.0 - q() / (w * w) + perturbation_derivative(w));
}

Grid::Grid(int size, bool offset) : size_(size), offset_(offset)
{
    if (size < 4 || !is_power_of_two(size))
        throw std::invalid_argument("grid size must be a power of two >= 4, got " +
                                    std::to_string(size));
}

double Grid::angle(int j) const noexcept
{
    const double shift = offset_ ? 0.5 : 0.0;
    return 2.0 * std::numbers::pi * (static_cast<double>(j) + shift) / size_;
}

cplx Grid::node(int j) const noexcept
{
    const double t = angle(j);
    return {std::cos(t), std::sin(t)};
}

bool is_power_of_two(int n) noexcept
{
    return n > 0 && std::has_single_bit(static_cast<unsigned>(n));
}

// On the circle 1/w = conj(w); using it keeps conjugate evaluation symmetric.
GridSamples eval_map(const BoundaryMap& b, const Grid& grid)
{
    check_grid_resolves(b, grid);
    GridSamples out{grid, std::vector<cplx>(static_cast<size_t>(grid.size()))};
    for (int j = 0; j < grid.size(); ++j) {
        const cplx w = grid.node(j);
        out.values[static_cast<size_t>(j)] =
            b.scale() * (w + b.q() * std::conj(w) + b.perturbation(w));
    }
    return out;
}

GridSamples eval_map_derivative(const BoundaryMap& b, const Grid& grid)
{
    check_grid_resolves(b, grid);
    GridSamples out{grid, std::vector<cplx>(static_cast<size_t>(grid.size()))};
    for (int j = 0; j < grid.size(); ++j) {
        const cplx w = grid.node(j);
        const cplx wbar = std::conj(w);
        out.values[static_cast<size_t>(j)] =
            b.scale() * (1.0 - b.q() * (wbar * wbar) + b.perturbation_derivative(w));
    }
    return out;
}

GridSamples conjugate_samples(const BoundaryMap& b, const Grid& grid)
{
    check_grid_resolves(b, grid);
    GridSamples out{grid, std::vector<cplx>(static_cast<size_t>(grid.size()))};
    for (int j = 0; j < grid.size(); ++j) {
        const cplx w = std::conj(grid.node(j));
        out.values[static_cast<size_t>(j)] =
            b.scale() * (w + b.q() * std::conj(w) + b.perturbation(w));
    }
    return out;
}

CoercivityReport coercivity_guard(const BoundaryMap& b, double margin)
{
    CoercivityReport rep;
    const double radius = 0.5 * (1.0 - b.q());
    rep.bound = radius * (1.0 - margin);
    if (b.pert().is_zero())
        return rep;

    const int m = 4 * static_cast<int>(std::bit_ceil(static_cast<unsigned>(2 * (b.modes() + 2))));
    const Grid grid = Grid::integer(m);
    for (int j = 0; j < m; ++j)
        rep.sup_fprime = std::max(rep.sup_fprime, std::abs(b.perturbation_derivative(grid.node(j))));
    rep.ratio = rep.sup_fprime / radius;
    rep.ok = rep.sup_fprime <= rep.bound;
    return rep;
}

PerturbationCoeffs scaled_to_fprime_bound(const PerturbationCoeffs& a, double bound)
{
    double total = 0.0;
    for (int n = 2; n <= a.max_power(); ++n)
        total += n * std::abs(a[n]);
    if (total == 0.0)
        return a;
    std::vector<double> out(a.values().begin(), a.values().end());
    for (double& v : out)
        v *= bound / total;
    return PerturbationCoeffs(std::move(out));
}

double chord_arc_constant(const BoundaryMap& b, int grid_size)
{
    const Grid grid = Grid::integer(grid_size);
    const GridSamples phi = eval_map(b, grid);
    const GridSamples dphi = eval_map_derivative(b, grid);
    std::vector<cplx> nodes(static_cast<size_t>(grid_size));
    for (int j = 0; j < grid_size; ++j)
        nodes[static_cast<size_t>(j)] = grid.node(j);

    double best = std::abs(dphi.values[0]);
    for (size_t i = 0; i < nodes.size(); ++i) {
        best = std::min(best, std::abs(dphi.values[i]));
        for (size_t j = i + 1; j < nodes.size(); ++j) {
            const double ratio =
                std::abs(phi.values[j] - phi.values[i]) / std::abs(nodes[j] - nodes[i]);
            best = std::min(best, ratio);
        }
    }
    return best / b.scale();
}

}  // namespace vstate
