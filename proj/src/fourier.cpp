#include <vstate/fourier.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace vstate {

std::vector<cplx> fourier_coefficients(const Grid& grid, std::span<const cplx> samples)
{
    const int m = grid.size();
    if (static_cast<int>(samples.size()) != m)
        throw std::invalid_argument("expected " + std::to_string(m) + " samples, got " +
                                    std::to_string(samples.size()));
    std::vector<cplx> in(samples.begin(), samples.end());
    std::vector<cplx> out;
    Eigen::FFT<double> fft;
    fft.fwd(out, in);
    for (int k = 0; k < m; ++k) {
        cplx c = out[static_cast<size_t>(k)] / static_cast<double>(m);
        if (grid.offset()) {
            // theta_j = 2 pi (j + 1/2) / M; signed mode keeps the phase consistent
            const int signed_k = k <= m / 2 ? k : k - m;
            const double t = -std::numbers::pi * signed_k / m;
            c *= cplx{std::cos(t), std::sin(t)};
        }
        out[static_cast<size_t>(k)] = c;
    }
    return out;
}

SineAnalysis sine_analysis(const Grid& grid, std::span<const double> samples, int modes)
{
    const int m = grid.size();
    if (modes < 1 || modes >= m / 2)
        throw std::invalid_argument("cannot resolve " + std::to_string(modes) +
                                    " sine modes on a grid of " + std::to_string(m));
    std::vector<cplx> z(samples.size());
    for (size_t j = 0; j < samples.size(); ++j)
        z[j] = samples[j];
    const std::vector<cplx> hat = fourier_coefficients(grid, z);

    SineAnalysis out;
    out.sine.resize(static_cast<size_t>(modes));
    out.cosine_energy = hat[0].real() * hat[0].real();
    double tail = 0.0;
    for (int k = 1; k < m / 2; ++k) {
        const double s = -2.0 * hat[static_cast<size_t>(k)].imag();
        const double c = 2.0 * hat[static_cast<size_t>(k)].real();
        out.cosine_energy += c * c;
        if (k <= modes)
            out.sine[static_cast<size_t>(k - 1)] = s;
        else
            tail += s * s;
    }
    out.tail_norm = std::sqrt(tail);
    return out;
}

}  // namespace vstate
