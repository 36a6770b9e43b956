#include <vstate/linop.hpp>

#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

#include <vstate/fourier.hpp>
#include <vstate/functional.hpp>

namespace vstate {

namespace {

// Complex samples of G, d_Q G and the directional derivatives along w^n at
// staggered targets. Columns of the matrices are n = 2 .. N+1.
struct KernelPass {
    Grid targets = Grid::staggered(4);
    std::vector<cplx> g;
    std::vector<cplx> dq_g;
    Eigen::MatrixXcd jac;
    Eigen::MatrixXcd dq_jac;
};

int pass_grid(const PerturbationCoeffs& f, const JacobianOptions& opts)
{
    if (f.modes() < 1)
        throw std::invalid_argument("linearization needs at least one mode");
    const int m = opts.grid > 0 ? opts.grid : default_grid_size(f.modes());
    if (m < 4 * f.modes())
        throw std::invalid_argument("grid " + std::to_string(m) + " below 4N = " +
                                    std::to_string(4 * f.modes()));
    return m;
}

// Per target w the n-dependence of every integral is a discrete Fourier
// transform of a row kernel:
//   (1/M) sum_j A_j xi_j^n  = inverse FFT of A at n,
//   sum_j B_j xi_j^{-n}     = forward FFT of B at n.
KernelPass run_pass(const EllipseParam& qp, const PerturbationCoeffs& f,
                    const JacobianOptions& opts, bool with_jac, bool with_dq_jac)
{
    const int n_modes = f.modes();
    const int m = pass_grid(f, opts);
    const BoundaryMap b(qp, f);
    if (opts.guard == GuardPolicy::kEnforce) {
        const CoercivityReport rep = coercivity_guard(b, opts.margin);
        if (!rep.ok)
            throw GuardViolation("coercivity guard failed (ratio " + std::to_string(rep.ratio) +
                                 ")");
    }

    const Grid nodes = Grid::integer(m);
    const Grid targets = Grid::staggered(m);
    const GridSamples phi = eval_map(b, nodes);
    const GridSamples dphi = eval_map_derivative(b, nodes);
    const GridSamples phi_t = eval_map(b, targets);
    const GridSamples dphi_t = eval_map_derivative(b, targets);
    std::vector<cplx> xi(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j)
        xi[static_cast<size_t>(j)] = nodes.node(j);

    const double q = qp.value();
    const double two_omega = 0.5 * (1.0 - q * q);
    const double inv_m = 1.0 / m;

    KernelPass out;
    out.targets = targets;
    out.g.resize(static_cast<size_t>(m));
    out.dq_g.resize(static_cast<size_t>(m));
    if (with_jac)
        out.jac.resize(m, n_modes);
    if (with_dq_jac)
        out.dq_jac.resize(m, n_modes);

    Eigen::FFT<double> fft;
    const auto sz = static_cast<size_t>(m);
    std::vector<cplx> ka(sz), kb(sz), kc(sz), r1(sz), r2(sz), r3(sz);
    std::vector<cplx> fa, fb, fc, f1, f2, f3;

    for (int i = 0; i < m; ++i) {
        const auto ui = static_cast<size_t>(i);
        const cplx w = targets.node(i);
        const cplx wbar = std::conj(w);
        const cplx pw = phi_t.values[ui];
        const cplx pw_bar = std::conj(pw);
        const cplx wdp = w * dphi_t.values[ui];

        cplx g2{0.0, 0.0};
        cplx dq_g2{0.0, 0.0};
        for (size_t j = 0; j < sz; ++j) {
            const cplx delta = phi.values[j] - pw;
            const cplx d = 1.0 / delta;
            const cplx k1 = std::conj(delta) * d;
            const cplx dp_xi = dphi.values[j] * xi[j];
            const cplx e = xi[j] - w;
            const cplx e_bar = std::conj(e);
            g2 += k1 * dp_xi;
            dq_g2 += e * d * dp_xi - k1 * std::conj(xi[j]) - k1 * e_bar * d * dp_xi;
            if (with_jac) {
                ka[j] = k1;
                kb[j] = d * dp_xi * inv_m;
                kc[j] = k1 * d * dp_xi;
            }
            if (with_dq_jac) {
                const cplx d2 = d * d;
                r1[j] = e * d - k1 * e_bar * d;
                r2[j] = (-d * std::conj(xi[j]) - e_bar * d2 * dp_xi) * inv_m;
                r3[j] = k1 * d * std::conj(xi[j]) - e * d2 * dp_xi + 2.0 * e_bar * k1 * d2 * dp_xi;
            }
        }
        g2 *= inv_m;
        dq_g2 *= inv_m;
        out.g[ui] = (two_omega * pw_bar + g2) * wdp;
        out.dq_g[ui] = -q * pw_bar * wdp + two_omega * (w * wdp - pw_bar * wbar) - g2 * wbar +
                       wdp * dq_g2;

        if (!with_jac)
            continue;
        fft.inv(fa, ka);
        fft.fwd(fb, kb);
        fft.inv(fc, kc);
        if (with_dq_jac) {
            fft.inv(f1, r1);
            fft.fwd(f2, r2);
            fft.inv(f3, r3);
        }
        const double theta = targets.angle(i);
        for (int n = 2; n <= n_modes + 1; ++n) {
            const auto un = static_cast<size_t>(n);
            const cplx wn = std::polar(1.0, n * theta);
            const cplx wn_bar = std::conj(wn);
            const cplx nwn = static_cast<double>(n) * wn;
            const cplx sum_i = static_cast<double>(n) * fa[un] + (fb[un] - wn_bar * fb[0]) -
                               (fc[un] - wn * fc[0]);
            out.jac(i, n - 2) = two_omega * (wn_bar * wdp + pw_bar * nwn) + nwn * g2 + wdp * sum_i;
            if (with_dq_jac) {
                const cplx dq_sum = static_cast<double>(n) * f1[un] + (f2[un] - wn_bar * f2[0]) +
                                    (f3[un] - wn * f3[0]);
                out.dq_jac(i, n - 2) = -q * (wn_bar * wdp + pw_bar * nwn) +
                                       two_omega * (w * nwn - wn_bar * wbar) + nwn * dq_g2 -
                                       wbar * sum_i + wdp * dq_sum;
            }
        }
    }
    return out;
}

SineAnalysis analyze(const Grid& targets, const std::vector<cplx>& samples, int modes)
{
    std::vector<double> im(samples.size());
    for (size_t j = 0; j < samples.size(); ++j)
        im[j] = samples[j].imag();
    return sine_analysis(targets, im, modes);
}

Eigen::MatrixXd analyze_columns(const Grid& targets, const Eigen::MatrixXcd& cols)
{
    const auto n = static_cast<int>(cols.cols());
    Eigen::MatrixXd out(n, n);
    std::vector<double> im(static_cast<size_t>(cols.rows()));
    for (int c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < cols.rows(); ++r)
            im[static_cast<size_t>(r)] = cols(r, c).imag();
        const SineAnalysis sa = sine_analysis(targets, im, n);
        for (int r = 0; r < n; ++r)
            out(r, c) = sa.sine[static_cast<size_t>(r)];
    }
    return out;
}

void require_modes(int modes)
{
    if (modes < 3)
        throw std::invalid_argument("closed-form operator needs N >= 3, got " +
                                    std::to_string(modes));
}

}  // namespace

Eigen::VectorXd LinearOperatorMatrix::apply(const PerturbationCoeffs& h) const
{
    if (h.modes() != modes())
        throw std::invalid_argument("direction has " + std::to_string(h.modes()) +
                                    " modes, operator " + std::to_string(modes()));
    const auto v = h.values();
    return entries * Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double mode_eigenvalue(int n, double q) noexcept
{
    return 0.5 * (1.0 - q * q) * n - 1.0 - std::pow(q, n);
}

double mode_eigenvalue_dq(int n, double q) noexcept
{
    return -q * n - n * std::pow(q, n - 1);
}

LinearOperatorMatrix closed_form_lq(const EllipseParam& qp, int modes)
{
    require_modes(modes);
    const double q = qp.value();
    LinearOperatorMatrix out{Eigen::MatrixXd::Zero(modes, modes), q, 0.0};
    for (int n = 1; n <= modes; ++n) {
        const double lam = kClosedFormSign * mode_eigenvalue(n, q);
        out.entries(n - 1, n - 1) = lam;  // power n+1
        if (n >= 3)
            out.entries(n - 1, n - 3) = -q * lam;  // power n-1
    }
    return out;
}

LinearOperatorMatrix dq_of_lq_closed(const EllipseParam& qp, int modes)
{
    require_modes(modes);
    const double q = qp.value();
    LinearOperatorMatrix out{Eigen::MatrixXd::Zero(modes, modes), q, 0.0};
    for (int n = 1; n <= modes; ++n) {
        const double lam = mode_eigenvalue(n, q);
        const double dlam = mode_eigenvalue_dq(n, q);
        out.entries(n - 1, n - 1) = kClosedFormSign * dlam;
        if (n >= 3)
            out.entries(n - 1, n - 3) = kClosedFormSign * (-lam - q * dlam);
    }
    return out;
}

LinearOperatorMatrix assemble_jacobian(const EllipseParam& q, const PerturbationCoeffs& f,
                                       const JacobianOptions& opts)
{
    const KernelPass pass = run_pass(q, f, opts, true, false);
    return {analyze_columns(pass.targets, pass.jac), q.value(), f.sup_norm()};
}

LinearOperatorMatrix dq_jacobian_integral(const EllipseParam& q, const PerturbationCoeffs& f,
                                          const JacobianOptions& opts)
{
    const KernelPass pass = run_pass(q, f, opts, true, true);
    return {analyze_columns(pass.targets, pass.dq_jac), q.value(), f.sup_norm()};
}

std::vector<double> dq_residual(const EllipseParam& q, const PerturbationCoeffs& f,
                                const JacobianOptions& opts)
{
    const KernelPass pass = run_pass(q, f, opts, false, false);
    return analyze(pass.targets, pass.dq_g, f.modes()).sine;
}

Linearization linearize(const EllipseParam& q, const PerturbationCoeffs& f,
                        const JacobianOptions& opts)
{
    const KernelPass pass = run_pass(q, f, opts, true, false);
    const SineAnalysis res = analyze(pass.targets, pass.g, f.modes());
    Linearization out;
    out.residual = res.sine;
    out.tail_norm = res.tail_norm;
    out.jacobian = {analyze_columns(pass.targets, pass.jac), q.value(), f.sup_norm()};
    out.dq_residual = analyze(pass.targets, pass.dq_g, f.modes()).sine;
    return out;
}

}  // namespace vstate
