#include <doctest.h>

#include <cmath>
#include <random>

#include <vstate/functional.hpp>
#include <vstate/linop.hpp>
#include <vstate/spectrum.hpp>

using namespace vstate;

namespace {

BoundaryMap ellipse(double q) { return {EllipseParam(q), PerturbationCoeffs(1)}; }

PerturbationCoeffs random_small(int modes, double q, double fraction, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PerturbationCoeffs a(modes);
    for (int p = 2; p <= modes + 1; ++p)
        a.set(p, u(rng) * std::pow(0.7, p));
    return scaled_to_fprime_bound(a, fraction * 0.5 * (1.0 - q));
}

}  // namespace

TEST_CASE("Kirchhoff relation with free angular velocity")
{
    for (double q : {0.2, 0.5, 0.8}) {
        for (double omega : {0.05, 0.3, 0.5}) {
            const GridSamples g = eval_G(RotationSpeed(omega), ellipse(q), 256);
            double worst = 0.0;
            for (int i = 0; i < g.grid.size(); ++i) {
                const cplx w = g.grid.node(i);
                const double expect = q * (4.0 * omega + q * q - 1.0) * std::imag(w * w);
                worst = std::max(worst, std::abs(g.values[static_cast<size_t>(i)].imag() - expect));
            }
            CHECK(worst < 1e-10);
        }
    }
    // Q = 0.5, Omega = 0.5: amplitude 0.5 (2 + 0.25 - 1) = 0.625 at w = exp(i pi/4)
    CHECK(0.5 * (4.0 * 0.5 + 0.25 - 1.0) == doctest::Approx(0.625));
}

TEST_CASE("ellipses rotate at the Kirchhoff speed")
{
    for (double q : {0.1, 0.5, 0.9}) {
        const GridSamples g = eval_G(RotationSpeed::kirchhoff(EllipseParam(q)), ellipse(q), 256);
        for (const cplx& z : g.values)
            CHECK(std::abs(z.imag()) < 1e-11);
    }
    CHECK(RotationSpeed(0.2).physical());
    CHECK_FALSE(RotationSpeed(0.7).physical());
}

TEST_CASE("trivial branch of F")
{
    for (int k = 0; k < 64; ++k) {
        const double q = 0.05 + 0.85 * k / 63.0;
        FunctionalOptions opts;
        opts.grid = 256;
        const ResidualSpectrum r = eval_F(EllipseParam(q), PerturbationCoeffs(32), opts);
        CHECK(r.sup_norm() < 1e-11);
        CHECK(r.tail_norm < 1e-11);
        CHECK(r.cosine_energy < 1e-20);
    }
}

TEST_CASE("G scales quadratically under dilation")
{
    PerturbationCoeffs a(8);
    a.set(3, 0.02);
    a.set(6, -0.01);
    const BoundaryMap b(EllipseParam(0.4), a);
    const double s = 1.7;
    const RotationSpeed omega(0.21);
    const GridSamples g1 = eval_G(omega, b, 128);
    const GridSamples g2 = eval_G(omega, BoundaryMap::dilated(b, s), 128);
    double worst = 0.0;
    for (size_t i = 0; i < g1.values.size(); ++i)
        worst = std::max(worst, std::abs(g2.values[i] - s * s * g1.values[i]));
    CHECK(worst < 1e-11);
}

TEST_CASE("finite-difference linearization at the ellipse")
{
    const EllipseParam q(0.5);
    const double t = 1e-6;
    const int n = 16;
    const LinearOperatorMatrix lq = closed_form_lq(q, n);

    SUBCASE("kernel direction is nearly annihilated")
    {
        const PerturbationCoeffs v = kernel_vector(3, 0.5, n);
        PerturbationCoeffs f(n);
        for (int p = 2; p <= n + 1; ++p)
            f.set(p, t * v[p]);
        const ResidualSpectrum r = eval_F(q, f);
        const Eigen::VectorXd lv = lq.apply(v);
        for (int k = 0; k < n; ++k)
            CHECK(std::abs(r.g[static_cast<size_t>(k)] / t - lv(k)) < 1e-5);
    }
    SUBCASE("w^2 excites the first mode")
    {
        PerturbationCoeffs f(n);
        f.set(2, t);
        const ResidualSpectrum r = eval_F(q, f);
        // textbook value -(1/2)(1+Q)^2 = -1.125 times the validated orientation
        CHECK(std::abs(r.g[0] / t - kClosedFormSign * -1.125) < 1e-5);
        CHECK(std::abs(r.g[0] / t - 1.125) < 1e-5);
    }
}

TEST_CASE("F is resolution independent")
{
    const EllipseParam q(0.45);
    const PerturbationCoeffs f = random_small(24, 0.45, 0.2, 3);
    FunctionalOptions a, b;
    a.grid = 128;
    b.grid = 256;
    const ResidualSpectrum ra = eval_F(q, f, a);
    const ResidualSpectrum rb = eval_F(q, f, b);
    for (size_t k = 0; k < ra.g.size(); ++k)
        CHECK(std::abs(ra.g[k] - rb.g[k]) < 1e-11);
}

TEST_CASE("eval_F preconditions")
{
    const EllipseParam q(0.5);
    PerturbationCoeffs wild(4);
    wild.set(2, 0.2);
    CHECK_THROWS_AS(eval_F(q, wild), GuardViolation);
    FunctionalOptions lax;
    lax.guard = GuardPolicy::kReport;
    CHECK_NOTHROW(eval_F(q, wild, lax));

    FunctionalOptions small;
    small.grid = 32;
    CHECK_THROWS_AS(eval_F(q, PerturbationCoeffs(16), small), std::invalid_argument);
    CHECK_THROWS_AS(eval_F(q, PerturbationCoeffs(0)), std::invalid_argument);
    CHECK(default_grid_size(128) == 512);
    CHECK(default_grid_size(3) == 64);
}
