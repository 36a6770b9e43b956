#pragma once

// Projection of real periodic samples onto the sine/cosine basis.
//
//   F(theta) = c_0 + sum_{k>=1} (c_k cos k theta + s_k sin k theta)
//
// Samples may sit on the integer grid or the half-offset grid; the offset
// shows up as a per-mode phase exp(-i pi k / M) that is removed explicitly.

#include <span>
#include <vector>

#include <vstate/boundary.hpp>

namespace vstate {

struct SineAnalysis {
    std::vector<double> sine;    // s_1 .. s_N
    double cosine_energy = 0.0;  // sum of c_k^2 over all resolved k
    double tail_norm = 0.0;      // l2 norm of s_k for N < k < M/2
};

/// Requires 1 <= modes < size/2.
SineAnalysis sine_analysis(const Grid& grid, std::span<const double> samples, int modes);

/// Complex coefficients hat F_k = (1/M) sum_j F(theta_j) e^{-ik theta_j}
/// for k = 0 .. M-1 (negative modes wrap to the top of the range).
std::vector<cplx> fourier_coefficients(const Grid& grid, std::span<const cplx> samples);

}  // namespace vstate
