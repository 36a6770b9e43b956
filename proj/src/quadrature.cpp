#include <vstate/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace vstate {

QuadratureRule::QuadratureRule(int nodes) : grid_(Grid::integer(nodes)) {}

void require_staggered(const Grid& targets, const QuadratureRule& rule)
{
    // Offset targets on a grid at least as fine as the nodes never hit a node:
    // (2i+1)/T is an odd multiple of 1/T, node angles are even multiples.
    if (!targets.offset() || targets.size() < rule.size())
        throw std::invalid_argument("target grid of size " + std::to_string(targets.size()) +
                                    " is not staggered against " +
                                    std::to_string(rule.size()) + " quadrature nodes");
}

cplx mean_integral(const GridSamples& f)
{
    if (f.grid.offset())
        throw std::invalid_argument("mean_integral expects samples on the integer grid");
    const int m = f.grid.size();
    cplx acc{0.0, 0.0};
    for (int j = 0; j < m; ++j)
        acc += f.values[static_cast<size_t>(j)] * f.grid.node(j);
    return acc / static_cast<double>(m);
}

GridSamples cauchy_pair_integral(const BoundaryMap& b, const Grid& targets,
                                 const QuadratureRule& rule, DiagonalMode mode,
                                 GuardPolicy guard)
{
    if (guard == GuardPolicy::kEnforce) {
        const CoercivityReport rep = coercivity_guard(b);
        if (!rep.ok)
            throw GuardViolation("coercivity guard failed: sup|f'| = " +
                                 std::to_string(rep.sup_fprime) + " exceeds " +
                                 std::to_string(rep.bound));
    }
    if (mode == DiagonalMode::kStaggered)
        require_staggered(targets, rule);
    else if (!(targets == rule.grid()))
        throw std::invalid_argument("diagonal-limit mode needs targets on the quadrature nodes");

    const int m = rule.size();
    const GridSamples phi = eval_map(b, rule.grid());
    const GridSamples dphi = eval_map_derivative(b, rule.grid());
    const GridSamples phi_t = eval_map(b, targets);

    // Quadrature weights xi_j Phi'(xi_j) / M.
    std::vector<cplx> weight(static_cast<size_t>(m));
    std::vector<cplx> phi_bar(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const auto uj = static_cast<size_t>(j);
        weight[uj] = rule.node(j) * dphi.values[uj] / static_cast<double>(m);
        phi_bar[uj] = std::conj(phi.values[uj]);
    }

    GridSamples out{targets, std::vector<cplx>(static_cast<size_t>(targets.size()))};
    for (int i = 0; i < targets.size(); ++i) {
        const auto ui = static_cast<size_t>(i);
        const cplx pw = phi_t.values[ui];
        const cplx pw_bar = std::conj(pw);
        cplx acc{0.0, 0.0};
        for (size_t j = 0; j < weight.size(); ++j) {
            if (mode == DiagonalMode::kLimit && j == ui) {
                const cplx w = targets.node(i);
                const cplx wbar = std::conj(w);
                const cplx limit = -wbar * wbar * b.derivative(wbar) / b.derivative(w);
                acc += limit * weight[j];
                continue;
            }
            acc += (phi_bar[j] - pw_bar) / (phi.values[j] - pw) * weight[j];
        }
        out.values[ui] = acc;
    }
    return out;
}

GridSamples bounded_kernel_integral(const KernelMatrix& kernel, const GridSamples& density,
                                    const Grid& targets)
{
    const auto m = static_cast<Eigen::Index>(density.values.size());
    if (density.grid.offset() || kernel.cols() != m || kernel.rows() != targets.size())
        throw std::invalid_argument("kernel is " + std::to_string(kernel.rows()) + "x" +
                                    std::to_string(kernel.cols()) + ", expected " +
                                    std::to_string(targets.size()) + "x" + std::to_string(m) +
                                    " against integer-grid density");
    const QuadratureRule rule(static_cast<int>(m));
    require_staggered(targets, rule);

    GridSamples out{targets, std::vector<cplx>(static_cast<size_t>(targets.size()))};
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        // The two nodes bracketing target i. A kernel with a continuous
        // extension to the diagonal varies by O(1/M) between them.
        const auto left = static_cast<Eigen::Index>(
            std::floor((static_cast<double>(i) + 0.5) * static_cast<double>(m) / targets.size()));
        const Eigen::Index right = (left + 1) % m;
        const double row_max = kernel.row(i).cwiseAbs().maxCoeff();
        if (!std::isfinite(row_max))
            throw std::invalid_argument("kernel has non-finite entries");
        if (row_max > 0.0 && std::abs(kernel(i, right) - kernel(i, left)) > 0.5 * row_max)
            throw std::invalid_argument("kernel jumps across the diagonal at target " +
                                        std::to_string(i) + "; not a bounded kernel");

        cplx acc{0.0, 0.0};
        for (Eigen::Index j = 0; j < m; ++j)
            acc += kernel(i, j) * density.values[static_cast<size_t>(j)] *
                   rule.node(static_cast<int>(j));
        out.values[static_cast<size_t>(i)] = acc / static_cast<double>(m);
    }
    return out;
}

}  // namespace vstate
