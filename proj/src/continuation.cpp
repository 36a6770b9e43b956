#include <vstate/continuation.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <vstate/functional.hpp>
#include <vstate/linop.hpp>
#include <vstate/spectrum.hpp>

namespace vstate {

namespace {

// Drop the pinned column (power m+1) and append the Q column.
Eigen::MatrixXd border(const Eigen::MatrixXd& jac, const Eigen::VectorXd& q_col, int m)
{
    const auto n = jac.rows();
    const Eigen::Index pinned = m - 1;  // column of power m+1
    Eigen::MatrixXd out(n, n);
    out.leftCols(pinned) = jac.leftCols(pinned);
    out.block(0, pinned, n, n - pinned - 1) = jac.rightCols(n - pinned - 1);
    out.col(n - 1) = q_col;
    return out;
}

Eigen::VectorXd as_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double sup_diff(const PerturbationCoeffs& a, const PerturbationCoeffs& b)
{
    const int n = std::max(a.modes(), b.modes());
    double s = 0.0;
    for (int p = 2; p <= n + 1; ++p)
        s = std::max(s, std::abs(a[p] - b[p]));
    return s;
}

// Geometric rate rho of the coefficient envelope |a_n| ~ C rho^n, fitted on
// window maxima over the upper three quarters of the spectrum. Windows at the
// round-off floor are ignored; nullopt means the series is already resolved.
std::optional<double> envelope_decay(const PerturbationCoeffs& a)
{
    const int n = a.modes();
    const int width = std::max(4, n / 32);
    const double floor = 1e-15 * std::max(a.sup_norm(), 1e-300);
    std::vector<double> xs, ys;
    for (int start = n / 4; start + width <= n; start += width) {
        double mx = 0.0;
        for (int k = start; k < start + width; ++k)
            mx = std::max(mx, std::abs(a.values()[static_cast<size_t>(k)]));
        if (mx > floor) {
            xs.push_back(start + 0.5 * width);
            ys.push_back(std::log(mx));
        }
    }
    if (xs.size() < 3)
        return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    const double cnt = static_cast<double>(xs.size());
    return std::exp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
}

// Mode count at which the fitted envelope reaches round-off; 0 if the
// envelope does not decay.
int modes_needed(const PerturbationCoeffs& a)
{
    const auto rho = envelope_decay(a);
    if (!rho)
        return a.modes();
    if (!(*rho < 0.9995))
        return 0;
    const int n = a.modes();
    double tail = 0.0;
    for (int k = n - std::max(4, n / 32); k < n; ++k)
        tail = std::max(tail, std::abs(a.values()[static_cast<size_t>(k)]));
    const double target = 1e-16 * a.sup_norm();
    if (tail <= target)
        return n;
    return n + static_cast<int>(std::ceil(std::log(target / tail) / std::log(*rho)));
}

void require_pin(int m, int modes)
{
    if (m < 3 || m > modes)
        throw std::invalid_argument("pinned power " + std::to_string(m + 1) + " outside 2.." +
                                    std::to_string(modes + 1));
}

}  // namespace

void BranchConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (m < 3)
        fail("m must be >= 3");
    if (m > 64 && !allow_large_m)
        fail("m > 64 refused: the coercivity radius (1-Q_m)/2 is tiny; override to force");
    if (modes < m + 1)
        fail("modes must exceed m");
    if (!is_power_of_two(grid) || grid < 4 * modes)
        fail("grid must be a power of two >= 4 * modes");
    if (!(eps_step > 0.0) || !(eps_max > 0.0))
        fail("eps_step and eps_max must be positive");
    if (direction == 0.0)
        fail("direction must be +1 or -1");
    if (verify_refine < 4)
        fail("verify_refine must be >= 4");
    if (!(newton_tol > 0.0) || newton_max_iters < 1)
        fail("newton tolerance and iteration budget must be positive");
    if (max_modes < modes)
        fail("max_modes below modes");
    if (max_halvings < 0)
        fail("max_halvings must be >= 0");
}

BranchPoint initial_point(int m, int modes, int grid)
{
    require_pin(m, modes);
    BranchPoint p;
    p.q = find_qm(m).q;
    p.coeffs = PerturbationCoeffs(modes);
    p.modes = modes;
    p.grid = grid > 0 ? grid : default_grid_size(modes);
    return p;
}

Eigen::MatrixXd bordered_jacobian(int m, double eps, double q, const PerturbationCoeffs& x,
                                  const NewtonOptions& opts)
{
    require_pin(m, x.modes());
    const JacobianOptions jo{opts.grid, opts.guard, opts.margin};
    const EllipseParam qp(q);
    if (eps == 0.0) {
        const PerturbationCoeffs zero(x.modes());
        const LinearOperatorMatrix jac = assemble_jacobian(qp, zero, jo);
        const LinearOperatorMatrix djac = dq_jacobian_integral(qp, zero, jo);
        return border(jac.entries, djac.apply(x), m);
    }
    PerturbationCoeffs a(x.modes());
    for (int p = 2; p <= x.max_power(); ++p)
        a.set(p, eps * x[p]);
    const Linearization lin = linearize(qp, a, jo);
    return border(lin.jacobian.entries, as_vector(lin.dq_residual) / eps, m);
}

BranchPoint newton_correct(int m, double eps, double q_guess, const PerturbationCoeffs& guess,
                           const NewtonOptions& opts)
{
    const int n = guess.modes();
    require_pin(m, n);
    const FunctionalOptions fo{opts.grid, opts.guard, opts.margin};
    const JacobianOptions jo{opts.grid, opts.guard, opts.margin};

    BranchPoint p;
    p.eps = eps;
    p.modes = n;
    p.grid = opts.grid > 0 ? opts.grid : default_grid_size(n);

    if (eps == 0.0) {
        // The pin forces the trivial branch; every Q solves F(Q, 0) = 0.
        p.q = q_guess;
        p.coeffs = PerturbationCoeffs(n);
        const ResidualSpectrum r = eval_F(EllipseParam(q_guess), p.coeffs, fo);
        p.residual_inf = r.sup_norm();
        p.tail_norm = r.tail_norm;
        return p;
    }

    // Scaled unknowns x = a / eps with x_{m+1} = 1 exactly.
    std::vector<double> x(guess.values().begin(), guess.values().end());
    for (double& v : x)
        v /= eps;
    x[static_cast<size_t>(m - 1)] = 1.0;
    double q = q_guess;
    double res = INFINITY;
    double best = INFINITY;

    for (int it = 0;; ++it) {
        if (!(q > 0.0 && q < 1.0))
            throw NewtonFailure("Newton left the ellipse family (Q = " + std::to_string(q) + ")",
                                res, it);
        PerturbationCoeffs a(n);
        for (int k = 0; k < n; ++k)
            a.values()[static_cast<size_t>(k)] = eps * x[static_cast<size_t>(k)];
        const EllipseParam qp(q);
        const ResidualSpectrum r = eval_F(qp, a, fo);
        res = r.sup_norm();
        if (!std::isfinite(res))
            throw NewtonFailure("non-finite residual", res, it);
        if (res < opts.tol) {
            p.q = q;
            p.coeffs = std::move(a);
            p.residual_inf = res;
            p.newton_iters = it;
            p.tail_norm = r.tail_norm;
            p.guard_ratio = coercivity_guard(p.map(), opts.margin).ratio;
            return p;
        }
        if (res > 100.0 * best)
            throw NewtonFailure("Newton diverging (residual " + std::to_string(res) +
                                    ", best " + std::to_string(best) + ")",
                                res, it);
        best = std::min(best, res);
        if (it == opts.max_iters)
            throw NewtonFailure("no convergence after " + std::to_string(it) +
                                    " Newton iterations (residual " + std::to_string(res) + ")",
                                res, it);

        const Linearization lin = linearize(qp, a, jo);
        const Eigen::MatrixXd jac =
            border(lin.jacobian.entries, as_vector(lin.dq_residual) / eps, m);
        const Eigen::VectorXd rhs = -as_vector(lin.residual) / eps;
        const Eigen::VectorXd step = jac.partialPivLu().solve(rhs);
        if (!step.allFinite())
            throw NewtonFailure("singular bordered Jacobian", res, it);

        for (int k = 0, c = 0; k < n; ++k) {
            if (k == m - 1)
                continue;
            x[static_cast<size_t>(k)] += step(c++);
        }
        q += step(n - 1);
    }
}

double verify_vstate(const BranchPoint& p, int refine)
{
    if (refine < 1)
        throw std::invalid_argument("refine must be >= 1");
    const int base = p.grid > 0 ? p.grid : default_grid_size(std::max(1, p.coeffs.modes()));
    const int mv = refine * base;
    const EllipseParam qp(p.q);
    const GridSamples g = eval_G(RotationSpeed::kirchhoff(qp), BoundaryMap(qp, p.coeffs),
                                 Grid::staggered(mv), QuadratureRule(mv), GuardPolicy::kReport);
    double s = 0.0;
    for (const cplx& z : g.values)
        s = std::max(s, std::abs(z.imag()));
    return s;
}

BranchResult trace_branch(const BranchConfig& cfg)
{
    cfg.validate();
    const BifurcationPoint bif = find_qm(cfg.m);

    BranchResult out;
    out.m = cfg.m;
    out.q_m = bif.q;

    int modes = cfg.modes;
    int grid = cfg.grid;
    const double sign = cfg.direction > 0.0 ? 1.0 : -1.0;
    NewtonOptions nopt;
    nopt.tol = cfg.newton_tol;
    nopt.max_iters = cfg.newton_max_iters;
    nopt.guard = cfg.strict_guard ? GuardPolicy::kEnforce : GuardPolicy::kReport;
    nopt.margin = cfg.margin;

    struct Node {
        double eps;
        double q;
        PerturbationCoeffs a;
    };
    Node older{0.0, bif.q, PerturbationCoeffs(modes)};
    std::optional<Node> last;

    const int steps = static_cast<int>(std::ceil(cfg.eps_max / cfg.eps_step - 1e-9));
    double done = 0.0;
    int halvings = 0;
    std::ostringstream diag;

    for (int k = 1; k <= steps;) {
        const double goal = sign * std::min(k * cfg.eps_step, cfg.eps_max);
        const double eps = done + (goal - done) / std::ldexp(1.0, halvings);

        double q_pred = bif.q;
        PerturbationCoeffs a_pred(modes);
        if (!last) {
            const PerturbationCoeffs v = kernel_vector(cfg.m, bif.q, modes);
            for (int p = 2; p <= modes + 1; ++p)
                a_pred.set(p, eps * v[p]);
        } else {
            const double t = (eps - last->eps) / (last->eps - older.eps);
            q_pred = last->q + t * (last->q - older.q);
            for (int p = 2; p <= modes + 1; ++p)
                a_pred.set(p, last->a[p] + t * (last->a[p] - older.a[p]));
        }

        BranchPoint point;
        bool accepted = false;
        std::string failure;
        int wanted = 0;
        try {
            for (;;) {
                nopt.grid = grid;
                point = newton_correct(cfg.m, eps, q_pred, a_pred.resized(modes), nopt);
                point.verify = verify_vstate(point, cfg.verify_refine);
                if (point.tail_norm <= cfg.tail_tol && *point.verify < cfg.certify_tol) {
                    accepted = true;
                    break;
                }
                // Under-resolved: size the next attempt from the coefficient decay.
                // Estimates from an under-resolved solve are rough, so anything
                // within twice the ceiling is still attempted at the ceiling.
                const int need = modes_needed(point.coeffs);
                int next = 2 * modes;
                while (need > 0 && next < need)
                    next *= 2;
                next = std::min(next, cfg.max_modes);
                if (need == 0 || need > 2 * cfg.max_modes || next <= modes) {
                    failure = "uncertified";
                    wanted = need;
                    break;
                }
                grid *= next / modes;
                modes = next;
                ++out.resolution_changes;
                q_pred = point.q;
                a_pred = point.coeffs.resized(modes);
            }
        } catch (const NewtonFailure& e) {
            failure = e.what();
        } catch (const GuardViolation& e) {
            failure = std::string(e.what()) + "; try a smaller eps_step";
        } catch (const SymmetryLeak& e) {
            failure = e.what();
        }

        if (failure == "uncertified") {
            out.truncated = true;
            diag << "eps=" << eps << ": converged (residual " << point.residual_inf
                 << ") but not certified at N=" << modes << ", M=" << grid
                 << " (verify " << point.verify.value_or(NAN) << ", tail " << point.tail_norm
                 << "); coefficient decay asks for "
                 << (wanted > 0 ? "N~" + std::to_string(wanted) : std::string("unbounded N"))
                 << ", ceiling " << cfg.max_modes
                 << " (boundary approaching a singular limiting shape?)";
            break;
        }
        if (!accepted) {
            if (++halvings > cfg.max_halvings) {
                out.truncated = true;
                diag << "eps=" << eps << ": step underflow after " << cfg.max_halvings
                     << " halvings; last failure: " << failure;
                break;
            }
            continue;
        }

        const double prev_eps = last ? last->eps : 0.0;
        const double prev_q = last ? last->q : bif.q;
        const PerturbationCoeffs prev_a = last ? last->a : PerturbationCoeffs(modes);
        const double dist =
            std::max(std::abs(point.q - prev_q), sup_diff(point.coeffs, prev_a)) /
            std::abs(eps - prev_eps);
        if (dist > cfg.continuity_limit) {
            out.truncated = true;
            diag << "eps=" << eps << ": jump of " << dist << " per unit eps exceeds "
                 << cfg.continuity_limit << "; branch switching suspected";
            break;
        }
        out.continuity_constant = std::max(out.continuity_constant, dist);

        if (last)
            older = {last->eps, last->q, last->a.resized(modes)};
        else
            older.a = older.a.resized(modes);
        last = Node{point.eps, point.q, point.coeffs};
        out.points.push_back(std::move(point));
        done = eps;
        if (eps == goal) {
            ++k;
            halvings = 0;
        }
    }
    out.diagnostics = diag.str();
    return out;
}

double extrapolate_bifurcation_q(int m, double h, int modes, int grid, double direction)
{
    if (!(h > 0.0))
        throw std::invalid_argument("probe amplitude must be positive");
    const double sign = direction > 0.0 ? 1.0 : -1.0;
    const double qm = find_qm(m).q;
    NewtonOptions opts;
    opts.grid = grid;
    // Newton stops on |F|, but Q is only pinned to |F| / eps; scale the
    // tolerance so the extrapolation is not limited by the stopping rule.
    opts.tol = std::max(1e-10 * h, 1e-14);
    const PerturbationCoeffs v = kernel_vector(m, qm, modes);

    double q[3];
    double q_guess = qm;
    for (int k = 0; k < 3; ++k) {
        const double eps = sign * (k + 1) * h;
        PerturbationCoeffs guess(modes);
        for (int p = 2; p <= modes + 1; ++p)
            guess.set(p, eps * v[p]);
        q[k] = newton_correct(m, eps, q_guess, guess, opts).q;
        q_guess = q[k];
    }
    // Quadratic through (h, 2h, 3h) evaluated at 0.
    return 3.0 * q[0] - 3.0 * q[1] + q[2];
}

}  // namespace vstate
